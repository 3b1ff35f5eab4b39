//! `orderable` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 internal invariant violation.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use orderable_core::format::{parse_identity, write_certificate, write_identities};
use orderable_core::matching::{inject, order};
use orderable_core::nonexistence::verdict;
use orderable_core::search::{search, IdentitySpec, InequalitySpec, Profile, SearchMode};
use orderable_core::verifier::{
    hall_test, lym_consistent, lym_test, verify_file, HallMode, LymCase,
};
use orderable_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "orderable",
    version,
    about = "Orderable binomial identities: search, match, verify"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate binomial identities for n under a constraint profile.
    Search {
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum)]
        profile: ProfileArg,
        /// Keep only the first K identities in sort order.
        #[arg(long)]
        limit: Option<usize>,
        /// Write the listed identities as identity records.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Number-theoretic nonexistence verdict.
    Check {
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum)]
        profile: CheckProfile,
    },
    /// Build the containment-respecting bijection for an identity file.
    Order {
        #[arg(long)]
        identity: PathBuf,
        /// Send the empty set to {n} before matching the rest.
        #[arg(long)]
        pin_wsb: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an injection for an inequality Σ_A C(n,a) <= Σ_B C(n,b).
    Inject {
        #[arg(long)]
        n: u32,
        #[arg(long = "A", value_delimiter = ',', required = true)]
        a: Vec<u32>,
        #[arg(long = "B", value_delimiter = ',', required = true)]
        b: Vec<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a certificate file.
    Verify {
        #[arg(long)]
        cert: PathBuf,
    },
    /// Random local LYM trials.
    Lym {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        a: u32,
        #[arg(long)]
        b: u32,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Hall condition and surplus for an identity file.
    Hall(HallArgs),
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("how").required(true).args(["exhaustive", "trials"]))]
struct HallArgs {
    #[arg(long)]
    identity: PathBuf,
    #[arg(long)]
    exhaustive: bool,
    #[arg(long, requires = "seed")]
    trials: Option<u64>,
    #[arg(long, requires = "trials")]
    seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProfileArg {
    Any,
    Fundamental,
    Wsb,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CheckProfile {
    Fundamental,
    Wsb,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Any => Profile::Any,
            ProfileArg::Fundamental => Profile::Fundamental,
            ProfileArg::Wsb => Profile::Wsb,
        }
    }
}

impl From<CheckProfile> for Profile {
    fn from(p: CheckProfile) -> Self {
        match p {
            CheckProfile::Fundamental => Profile::Fundamental,
            CheckProfile::Wsb => Profile::Wsb,
        }
    }
}

enum Failure {
    /// Reported, exit 1.
    Check,
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(Error::Io(e))
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InternalInvariant(_) => EXIT_INTERNAL,
        Error::Resource(_) => EXIT_FAIL,
        Error::Domain(_) | Error::Validation(_) | Error::Parse { .. } | Error::Io(_) => EXIT_USAGE,
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Check) => EXIT_FAIL,
        Err(Failure::Error(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn read_identity(path: &Path) -> Result<IdentitySpec, Error> {
    let text = fs::read_to_string(path)?;
    parse_identity(&text)
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Search {
            n,
            profile,
            limit,
            out: file,
        } => {
            let profile = Profile::from(profile);
            let outcome = search(n, profile, limit, SearchMode::All)?;
            let scope = if outcome.exhaustive {
                "exhaustive"
            } else {
                "NON-EXHAUSTIVE"
            };
            writeln!(out, "# search n={n} profile={profile}: {scope}")?;
            match (outcome.total, limit) {
                (Some(total), Some(k)) if (k as u128) < total => {
                    writeln!(out, "{total} identities (showing first {k})")?
                }
                (Some(total), _) => writeln!(out, "{total} identities")?,
                (None, _) => writeln!(out, "{} identities found", outcome.identities.len())?,
            }
            for spec in &outcome.identities {
                writeln!(out, "A={} B={}", join(&spec.a), join(&spec.b))?;
            }
            if let Some(path) = file {
                fs::write(&path, write_identities(&outcome.identities))?;
            }
            Ok(())
        }
        Command::Check { n, profile } => {
            let profile = Profile::from(profile);
            let v = verdict(n, profile);
            writeln!(out, "n={n} profile={profile}: {v}")?;
            Ok(())
        }
        Command::Order {
            identity,
            pin_wsb,
            out: file,
        } => {
            let spec = read_identity(&identity)?;
            let cert = order(&spec, pin_wsb)?;
            fs::write(&file, write_certificate(&cert))?;
            writeln!(
                out,
                "wrote {} pairs (type={}) to {}",
                cert.pairs.len(),
                cert.kind.name(),
                file.display()
            )?;
            Ok(())
        }
        Command::Inject { n, a, b, out: file } => {
            let cert = inject(&InequalitySpec::new(n, a, b))?;
            fs::write(&file, write_certificate(&cert))?;
            writeln!(
                out,
                "wrote {} pairs (type={}) to {}",
                cert.pairs.len(),
                cert.kind.name(),
                file.display()
            )?;
            Ok(())
        }
        Command::Verify { cert } => {
            let report = verify_file(&cert)?;
            if report.passed() {
                writeln!(out, "PASS pairs={}", report.pairs_checked)?;
                Ok(())
            } else {
                writeln!(out, "FAIL {} failure(s)", report.failures.len())?;
                for f in &report.failures {
                    writeln!(out, "  {f}")?;
                }
                Err(Failure::Check)
            }
        }
        Command::Lym {
            n,
            a,
            b,
            trials,
            seed,
        } => {
            let reports = lym_test(n, a, b, trials, seed)?;
            writeln!(
                out,
                "# local LYM n={n} a={a} b={b} trials={trials} seed={seed}"
            )?;
            let mut strict = 0u64;
            let mut equal = 0u64;
            let mut bad = 0u64;
            for r in &reports {
                if r.strict {
                    strict += 1;
                } else if r.bound_holds {
                    equal += 1;
                }
                if !lym_consistent(r) {
                    bad += 1;
                    writeln!(out, "  inconsistent: {r:?}")?;
                }
                let label = match r.case {
                    LymCase::Empty => "empty",
                    LymCase::Singleton => "singleton",
                    LymCase::Full => "full",
                    LymCase::Random(_) => continue,
                };
                writeln!(
                    out,
                    "{label}: |S|={} |Sh|={} F={}/{} {}",
                    r.family_size,
                    r.shadow_size,
                    r.fraction.0,
                    r.fraction.1,
                    if r.strict {
                        "strict"
                    } else if r.bound_holds {
                        "equality"
                    } else {
                        "VIOLATED"
                    }
                )?;
            }
            let verdict = if bad == 0 { "PASS" } else { "FAIL" };
            writeln!(
                out,
                "RESULT: {verdict} checked={} strict={strict} equality={equal}",
                reports.len()
            )?;
            if bad == 0 {
                Ok(())
            } else {
                Err(Failure::Check)
            }
        }
        Command::Hall(args) => {
            let spec = read_identity(&args.identity)?;
            let mode = match (args.exhaustive, args.trials, args.seed) {
                (true, _, _) => HallMode::Exhaustive,
                (false, Some(trials), Some(seed)) => HallMode::Sampled { trials, seed },
                _ => unreachable!("enforced by the argument group"),
            };
            let report = hall_test(&spec, mode)?;
            let mode_name = match mode {
                HallMode::Exhaustive => "exhaustive".to_string(),
                HallMode::Sampled { trials, seed } => {
                    format!("sampled trials={trials} seed={seed}")
                }
            };
            writeln!(out, "# hall {spec} mode={mode_name}")?;
            writeln!(
                out,
                "proper nonempty Z checked: {}, violations: {}",
                report.samples_checked, report.violation_count
            )?;
            for v in &report.violations {
                writeln!(
                    out,
                    "  violation: |Z|={} |Sh_B(Z)|={} Z={:x?}",
                    v.z_size, v.shadow_size, v.members
                )?;
            }
            writeln!(
                out,
                "Z = whole A family: |Sh_B| = {}, |A family| = {} ({})",
                report.full_shadow_size,
                report.family_size,
                if report.full_family_equality() {
                    "equal"
                } else {
                    "MISMATCH"
                }
            )?;
            let min = report
                .min_surplus
                .map_or_else(|| "none".to_string(), |m| m.to_string());
            let verdict = if report.passed() { "PASS" } else { "FAIL" };
            writeln!(
                out,
                "RESULT: {verdict} min_surplus={min} checked={}",
                report.samples_checked
            )?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Check)
            }
        }
    }
}

fn join(levels: &[u32]) -> String {
    levels
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",")
}
