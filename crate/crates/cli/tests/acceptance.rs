//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.
//!
//! Run with `cargo test -p orderable-cli --test acceptance`.

use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use orderable_core::search::{brute_force_search, search, Profile, SearchMode};
use orderable_core::verifier::{lym_test, LymCase};

type Check = Result<String, String>;
type Criterion = (&'static str, fn(&Ctx) -> Check);
type OrderCase<'a> = (&'a str, u32, &'a [u32], &'a [u32], usize);

struct Ctx {
    dir: tempfile::TempDir,
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
    elapsed: Duration,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Run {
        let start = Instant::now();
        let output = Command::new(env!("CARGO_BIN_EXE_orderable"))
            .args(args)
            .output()
            .expect("spawn orderable");
        Run {
            code: output.status.code().unwrap_or(-1),
            stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
            elapsed: start.elapsed(),
        }
    }

    fn ok(&self, args: &[&str]) -> Result<Run, String> {
        let r = self.run(args);
        if r.code == 0 {
            Ok(r)
        } else {
            Err(format!(
                "`orderable {}` exited {}: {}{}",
                args.join(" "),
                r.code,
                r.stdout.trim(),
                r.stderr.trim()
            ))
        }
    }

    fn identity_file(&self, name: &str, n: u32, a: &[u32], b: &[u32]) -> PathBuf {
        let p = self.path(name);
        fs::write(
            &p,
            format!("IDENTITY v1\nn={n}\nA={}\nB={}\n", join(a), join(b)),
        )
        .unwrap();
        p
    }
}

fn join(levels: &[u32]) -> String {
    levels
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// Independent binomial: multiplicative formula, exact in u128 for n <= 64.
fn binom(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u128;
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n as u128 - i) / (i + 1);
    }
    r
}

fn side_sum(n: u32, levels: &[u32]) -> u128 {
    levels.iter().map(|&k| binom(n, k)).sum()
}

fn is_prime(p: u64) -> bool {
    p >= 2
        && (2..p)
            .take_while(|d| d * d <= p)
            .all(|d| !p.is_multiple_of(d))
}

fn prime_power(n: u64) -> Option<(u64, u32)> {
    let p = (2..=n).find(|&d| n.is_multiple_of(d))?;
    let mut x = n;
    let mut e = 0;
    while x.is_multiple_of(p) {
        x /= p;
        e += 1;
    }
    (x == 1).then_some((p, e))
}

fn field<T: std::str::FromStr>(line: &str, key: &str) -> Option<T> {
    line.split_whitespace()
        .find_map(|w| w.strip_prefix(key))
        .and_then(|v| v.parse().ok())
}

/// `(source, image)` pairs of a certificate, plus its header lines.
fn cert_pairs(text: &str) -> (Vec<&str>, Vec<(u64, u64)>) {
    let lines: Vec<&str> = text.lines().collect();
    let pairs = lines[6..]
        .iter()
        .map(|l| {
            let (a, b) = l.split_once(' ').unwrap();
            let hex = |x: &str| u64::from_str_radix(x.trim_start_matches("0x"), 16).unwrap();
            (hex(a), hex(b))
        })
        .collect();
    (lines[..6].to_vec(), pairs)
}

fn render_cert(header: &[&str], pairs: &[(u64, u64)]) -> String {
    let mut out = String::new();
    for h in header {
        out.push_str(h);
        out.push('\n');
    }
    for (a, b) in pairs {
        out.push_str(&format!("{a:#x} {b:#x}\n"));
    }
    out
}

fn comparable(x: u64, y: u64) -> bool {
    x & y == x || x & y == y
}

const PAPER_IDENTITIES: [(u32, &[u32], &[u32], u128); 3] = [
    (15, &[0, 4, 6, 13], &[1, 3, 5, 10], 6476),
    (20, &[0, 5, 6, 7, 18], &[1, 3, 4, 8], 131975),
    (21, &[0, 4, 5, 7, 14, 19], &[1, 3, 6, 8], 259105),
];

fn c1_paper_identities(ctx: &Ctx) -> Check {
    let mut times = Vec::new();
    for (n, a, b, _) in PAPER_IDENTITIES {
        let r = ctx.ok(&["search", "--n", &n.to_string(), "--profile", "wsb"])?;
        let want = format!("A={} B={}", join(a), join(b));
        ensure(r.stdout.lines().any(|l| l == want), || {
            format!("n={n}: `{want}` not in output")
        })?;
        ensure(r.stdout.contains(": exhaustive"), || {
            format!("n={n}: not exhaustive")
        })?;
        ensure(r.elapsed < Duration::from_secs(60), || {
            format!("n={n} took {:?}", r.elapsed)
        })?;
        times.push(format!("n={n} {:.2?}", r.elapsed));
    }
    Ok(times.join(", "))
}

fn c2_sums(ctx: &Ctx) -> Check {
    let mut out = Vec::new();
    for (n, a, b, want) in PAPER_IDENTITIES {
        let (sa, sb) = (side_sum(n, a), side_sum(n, b));
        ensure(sa == want && sb == want, || {
            format!("n={n}: sums {sa}/{sb}, expected {want}")
        })?;
        // The tool recomputes the sums when it loads the identity.
        let id = ctx.identity_file(&format!("sum{n}.id"), n, a, b);
        let r = ctx.run(&["hall", "--identity", s(&id), "--trials", "1", "--seed", "0"]);
        ensure(r.code == 0, || {
            format!("n={n}: identity rejected: {}", r.stderr)
        })?;
        out.push(format!("n={n} {want}"));
    }
    Ok(out.join(", "))
}

fn c3_n10_fundamental(ctx: &Ctx) -> Check {
    let r = ctx.ok(&["search", "--n", "10", "--profile", "fundamental"])?;
    ensure(r.stdout.lines().any(|l| l == "0 identities"), || {
        format!("output: {}", r.stdout)
    })?;
    ensure(r.stdout.contains(": exhaustive"), || {
        "not exhaustive".into()
    })?;
    ensure(r.elapsed < Duration::from_secs(5), || {
        format!("took {:?}", r.elapsed)
    })?;
    Ok(format!("0 identities in {:.2?}", r.elapsed))
}

fn c4_prime_powers(ctx: &Ctx) -> Check {
    let mut seen = Vec::new();
    for n in 2..=32u32 {
        let Some((p, alpha)) = prime_power(n as u64) else {
            continue;
        };
        let ns = n.to_string();
        let r = ctx.ok(&["search", "--n", &ns, "--profile", "fundamental"])?;
        ensure(
            r.stdout.lines().any(|l| l == "0 identities") && r.stdout.contains(": exhaustive"),
            || {
                format!(
                    "n={n}: search not empty: {}",
                    r.stdout.lines().nth(1).unwrap_or("")
                )
            },
        )?;
        let c = ctx.ok(&["check", "--n", &ns, "--profile", "fundamental"])?;
        let want = format!("none_exists prime_power p={p} alpha={alpha}");
        ensure(c.stdout.contains(&want), || {
            format!("n={n}: check said {}", c.stdout.trim())
        })?;
        seen.push(n);
    }
    ensure(seen.len() == 18, || {
        format!("expected 18 prime powers, saw {seen:?}")
    })?;
    Ok(format!("{} prime powers: {seen:?}", seen.len()))
}

fn c5_two_prime(ctx: &Ctx) -> Check {
    let mut out = Vec::new();
    for n in [10u32, 14, 22, 26] {
        let c = ctx.ok(&["check", "--n", &n.to_string(), "--profile", "wsb"])?;
        let line = c.stdout.trim();
        ensure(line.contains("none_exists prop_pq"), || {
            format!("n={n}: {line}")
        })?;
        let (p, k, q, m): (u64, u32, u64, u32) = (
            field(line, "p=").ok_or("missing p")?,
            field(line, "k=").ok_or("missing k")?,
            field(line, "q=").ok_or("missing q")?,
            field(line, "m=").ok_or("missing m")?,
        );
        ensure(
            is_prime(p) && is_prime(q) && p != q && k >= 1 && m >= 1,
            || format!("n={n}: bad witness {line}"),
        )?;
        ensure(p.pow(k) * q.pow(m) == n as u64, || {
            format!("n={n}: p^k q^m != n")
        })?;
        ensure(p >= 1u64 << q.pow(m), || format!("n={n}: p < 2^(q^m)"))?;
        out.push(format!("n={n} (p={p},k={k},q={q},m={m})"));
    }
    for n in [10u32, 14] {
        let r = ctx.ok(&["search", "--n", &n.to_string(), "--profile", "wsb"])?;
        ensure(
            r.stdout.lines().any(|l| l == "0 identities") && r.stdout.contains(": exhaustive"),
            || format!("wsb search n={n} not empty"),
        )?;
        ensure(r.elapsed < Duration::from_secs(60), || {
            format!("n={n} took {:?}", r.elapsed)
        })?;
    }
    out.push("wsb search empty for 10, 14".into());
    Ok(out.join(", "))
}

fn order_and_verify(
    ctx: &Ctx,
    tag: &str,
    n: u32,
    a: &[u32],
    b: &[u32],
    pin: bool,
) -> Result<(String, Duration), String> {
    let id = ctx.identity_file(&format!("{tag}.id"), n, a, b);
    let cert = ctx.path(&format!("{tag}.cert"));
    let again = ctx.path(&format!("{tag}.again.cert"));
    let mut args = vec!["order", "--identity", s(&id), "--out", s(&cert)];
    if pin {
        args.push("--pin-wsb");
    }
    let r = ctx.ok(&args)?;
    args[4] = s(&again);
    ctx.ok(&args)?;
    let text = fs::read_to_string(&cert).map_err(|e| e.to_string())?;
    ensure(text == fs::read_to_string(&again).unwrap(), || {
        format!("{tag}: re-run not byte-identical")
    })?;
    let v = ctx.ok(&["verify", "--cert", s(&cert)])?;
    ensure(v.stdout.starts_with("PASS"), || {
        format!("{tag}: {}", v.stdout)
    })?;
    Ok((text, r.elapsed))
}

fn c6_order_verify(ctx: &Ctx) -> Check {
    let cases: [OrderCase; 3] = [
        ("six", 6, &[0, 3], &[1, 2], 21),
        ("sym5", 5, &[2], &[3], 10),
        ("paper15", 15, &[0, 4, 6, 13], &[1, 3, 5, 10], 6476),
    ];
    let mut out = Vec::new();
    for (tag, n, a, b, want) in cases {
        let (text, elapsed) = order_and_verify(ctx, tag, n, a, b, false)?;
        let (_, pairs) = cert_pairs(&text);
        ensure(pairs.len() == want, || {
            format!("{tag}: {} pairs, expected {want}", pairs.len())
        })?;
        ensure(pairs.iter().all(|&(x, y)| comparable(x, y)), || {
            format!("{tag}: incomparable pair")
        })?;
        ensure(elapsed < Duration::from_secs(60), || {
            format!("{tag} took {elapsed:?}")
        })?;
        out.push(format!("{tag} {want} pairs {elapsed:.2?}"));
    }
    Ok(out.join(", "))
}

fn c7_pinning(ctx: &Ctx) -> Check {
    let (text, _) = order_and_verify(ctx, "pin15", 15, &[0, 4, 6, 13], &[1, 3, 5, 10], true)?;
    ensure(text.lines().any(|l| l == "0x0 0x4000"), || {
        "pair (0x0, 0x4000) missing".into()
    })?;
    Ok("contains 0x0 0x4000, verify PASS".into())
}

fn c8_hall_exhaustive(ctx: &Ctx) -> Check {
    let id = ctx.identity_file("hall6.id", 6, &[0, 3], &[1, 2]);
    let r = ctx.ok(&["hall", "--identity", s(&id), "--exhaustive"])?;
    let result = r
        .stdout
        .lines()
        .find(|l| l.starts_with("RESULT:"))
        .ok_or("no RESULT line")?;
    let checked: u64 = field(result, "checked=").ok_or("no checked=")?;
    let min: i64 = field(result, "min_surplus=").ok_or("no min_surplus=")?;
    ensure(result.starts_with("RESULT: PASS"), || result.to_string())?;
    ensure(checked == (1 << 21) - 2, || format!("checked {checked}"))?;
    ensure(min >= 1, || format!("min_surplus {min}"))?;
    ensure(r.elapsed < Duration::from_secs(120), || {
        format!("took {:?}", r.elapsed)
    })?;
    Ok(format!(
        "checked={checked} min_surplus={min} in {:.2?}",
        r.elapsed
    ))
}

fn c9_lym(ctx: &Ctx) -> Check {
    let mut out = Vec::new();
    for (n, a, b) in [(8u32, 3u32, 5u32), (10, 4, 7), (12, 5, 2)] {
        let seed = 20_u64 + n as u64;
        let args = [n, a, b].map(|x| x.to_string());
        let r = ctx.ok(&[
            "lym",
            "--n",
            &args[0],
            "--a",
            &args[1],
            "--b",
            &args[2],
            "--trials",
            "1000",
            "--seed",
            &seed.to_string(),
        ])?;
        ensure(r.stdout.contains("RESULT: PASS"), || r.stdout.clone())?;

        let reports = lym_test(n, a, b, 1000, seed).map_err(|e| e.to_string())?;
        ensure(reports.len() == 1003, || {
            format!("{} reports", reports.len())
        })?;
        let (ca, cb) = (binom(n, a), binom(n, b));
        let mut strict = 0;
        for rep in &reports {
            let lhs = rep.shadow_size * ca;
            let rhs = rep.family_size * cb;
            ensure(lhs >= rhs && rep.bound_holds, || {
                format!("bound fails: {rep:?}")
            })?;
            let trivial = rep.family_size == 0 || rep.family_size == ca;
            ensure((lhs == rhs) == trivial && rep.strict != trivial, || {
                format!("strictness wrong: {rep:?}")
            })?;
            strict += usize::from(!trivial);
        }
        ensure(
            matches!(reports[0].case, LymCase::Empty) && !reports[0].strict,
            || "empty family not equality".into(),
        )?;
        ensure(
            matches!(reports[2].case, LymCase::Full) && !reports[2].strict,
            || "full level not equality".into(),
        )?;
        out.push(format!("({n},{a},{b}) strict={strict}"));
    }
    Ok(out.join(", "))
}

fn c10_oracle(_: &Ctx) -> Check {
    let mut total = 0;
    for n in 1..=12 {
        for profile in Profile::ALL {
            let fast = search(n, profile, None, SearchMode::All).map_err(|e| e.to_string())?;
            let brute = brute_force_search(n, profile).map_err(|e| e.to_string())?;
            ensure(fast.exhaustive, || {
                format!("n={n} {profile}: not exhaustive")
            })?;
            ensure(fast.identities == brute, || {
                format!(
                    "n={n} {profile}: {} vs {} identities",
                    fast.identities.len(),
                    brute.len()
                )
            })?;
            ensure(fast.total == Some(brute.len() as u128), || {
                format!("n={n}: total")
            })?;
            total += brute.len();
        }
    }
    Ok(format!("36 cases, {total} identities equal"))
}

fn c11_inject(ctx: &Ctx) -> Check {
    let cert = ctx.path("inject.cert");
    ctx.ok(&[
        "inject",
        "--n",
        "6",
        "--A",
        "2",
        "--B",
        "3",
        "--out",
        s(&cert),
    ])?;
    let text = fs::read_to_string(&cert).map_err(|e| e.to_string())?;
    let (_, pairs) = cert_pairs(&text);
    ensure(pairs.len() == 15, || format!("{} pairs", pairs.len()))?;
    let mut sources: Vec<u64> = pairs.iter().map(|p| p.0).collect();
    let mut images: Vec<u64> = pairs.iter().map(|p| p.1).collect();
    sources.dedup();
    images.sort_unstable();
    images.dedup();
    ensure(sources.len() == 15 && images.len() == 15, || {
        "sources or images repeat".into()
    })?;
    for &(x, y) in &pairs {
        ensure(
            x.count_ones() == 2 && y.count_ones() == 3 && x & y == x && y < 64,
            || format!("bad pair {x:#x} {y:#x}"),
        )?;
    }
    let v = ctx.ok(&["verify", "--cert", s(&cert)])?;
    ensure(v.stdout.starts_with("PASS"), || v.stdout.clone())?;
    Ok("15 comparable pairs, all 2-sets covered, verify PASS".into())
}

fn c12_tamper(ctx: &Ctx) -> Check {
    let id = ctx.identity_file("tamper.id", 6, &[0, 3], &[1, 2]);
    let cert = ctx.path("tamper.cert");
    ctx.ok(&["order", "--identity", s(&id), "--out", s(&cert)])?;
    let text = fs::read_to_string(&cert).unwrap();
    let (header, pairs) = cert_pairs(&text);
    let n_pairs = pairs.len();

    let mut cases: Vec<(&str, String)> = Vec::new();

    // Swap images of two pairs so that some pair stops being comparable.
    let (i, j) = (0..n_pairs)
        .flat_map(|i| (0..n_pairs).map(move |j| (i, j)))
        .find(|&(i, j)| {
            i != j
                && pairs[i].0.count_ones() == pairs[j].0.count_ones()
                && !comparable(pairs[i].0, pairs[j].1)
        })
        .ok_or("no incomparable swap")?;
    let mut p = pairs.clone();
    let (ti, tj) = (p[i].1, p[j].1);
    p[i].1 = tj;
    p[j].1 = ti;
    cases.push(("INCOMPARABLE_PAIR", render_cert(&header, &p)));

    // Reuse an image for a second source.
    let (i, j) = (0..n_pairs)
        .flat_map(|i| (0..n_pairs).map(move |j| (i, j)))
        .find(|&(i, j)| i != j && pairs[i].1.count_ones() == pairs[j].1.count_ones())
        .ok_or("no image to duplicate")?;
    let mut p = pairs.clone();
    p[j].1 = p[i].1;
    cases.push(("NOT_INJECTIVE", render_cert(&header, &p)));

    // Repeat a pair line and bump the declared count.
    let mut p = pairs.clone();
    p.insert(1, p[0]);
    let mut h = header.clone();
    let bumped = format!("pairs={}", n_pairs + 1);
    h[5] = &bumped;
    cases.push(("DUPLICATE_SOURCE", render_cert(&h, &p)));

    // Map the empty set to the full set: comparable, but level 6 is not in B.
    let mut p = pairs.clone();
    ensure(p[0].0 == 0, || "first source is not the empty set".into())?;
    p[0].1 = 0x3f;
    cases.push(("WRONG_LEVEL", render_cert(&header, &p)));

    // Drop the last pair without touching the header.
    let mut p = pairs.clone();
    p.pop();
    cases.push(("PAIR_COUNT_MISMATCH", render_cert(&header, &p)));

    let mut out = Vec::new();
    for (k, (code, body)) in cases.iter().enumerate() {
        let path = ctx.path(&format!("tampered{k}.cert"));
        fs::write(&path, body).unwrap();
        let r = ctx.run(&["verify", "--cert", s(&path)]);
        ensure(r.code == 1, || format!("{code}: exit {}", r.code))?;
        ensure(r.stdout.starts_with("FAIL"), || {
            format!("{code}: {}", r.stdout)
        })?;
        ensure(
            r.stdout.lines().any(|l| l.trim_start().starts_with(code)),
            || format!("{code} not reported: {}", r.stdout),
        )?;
        out.push(*code);
    }
    Ok(format!("rejected {}", out.join(", ")))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("paper identities found by search", c1_paper_identities),
        ("identity side sums", c2_sums),
        ("no fundamental identity for n=10", c3_n10_fundamental),
        ("prime powers up to 32", c4_prime_powers),
        ("two-prime obstruction", c5_two_prime),
        ("order then verify", c6_order_verify),
        ("wsb pinning", c7_pinning),
        ("exhaustive hall surplus", c8_hall_exhaustive),
        ("local LYM", c9_lym),
        ("search equals brute force", c10_oracle),
        ("injection for 2-sets into 3-sets", c11_inject),
        ("tampered certificates rejected", c12_tamper),
    ];
    let ctx = Ctx {
        dir: tempfile::tempdir().expect("tempdir"),
    };
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome =
            panic::catch_unwind(panic::AssertUnwindSafe(|| f(&ctx))).unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
