//! Text formats for identities and certificates (UTF-8, LF line endings).
//!
//! Identity record:
//!
//! ```text
//! IDENTITY v1
//! n=15
//! A=0,4,6,13
//! B=1,3,5,10
//! ```
//!
//! Certificate:
//!
//! ```text
//! ORDERABLE-CERT v1
//! n=2
//! A=0,2
//! B=1
//! type=perfect
//! pairs=2
//! 0x0 0x1
//! 0x3 0x2
//! ```
//!
//! Decimals and hex masks are canonical (no sign, no leading zeros, lowercase
//! hex), so writing a parsed file reproduces it byte for byte.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::SubsetMask;
use crate::matching::{CertificateKind, MatchingCertificate};
use crate::search::{join_levels, IdentitySpec};

pub const IDENTITY_HEADER: &str = "IDENTITY v1";
pub const CERT_HEADER: &str = "ORDERABLE-CERT v1";

pub fn write_identity(spec: &IdentitySpec) -> String {
    format!(
        "{IDENTITY_HEADER}\nn={}\nA={}\nB={}\n",
        spec.n,
        join_levels(&spec.a),
        join_levels(&spec.b)
    )
}

/// Back-to-back identity records.
pub fn write_identities(specs: &[IdentitySpec]) -> String {
    specs.iter().map(write_identity).collect()
}

/// Exactly one identity record.
pub fn parse_identity(text: &str) -> Result<IdentitySpec> {
    let mut specs = parse_identities(text)?;
    match specs.len() {
        1 => Ok(specs.remove(0)),
        0 => Err(Error::parse(1, "empty identity file")),
        k => Err(Error::parse(
            5,
            format!("expected one identity record, found {k}"),
        )),
    }
}

pub fn parse_identities(text: &str) -> Result<Vec<IdentitySpec>> {
    let lines = split_lines(text)?;
    if lines.len() % 4 != 0 {
        return Err(Error::parse(
            lines.len() + 1,
            "truncated identity record (expected 4 lines per record)",
        ));
    }
    lines
        .chunks(4)
        .enumerate()
        .map(|(i, rec)| {
            let base = 4 * i + 1;
            expect_exact(rec[0], IDENTITY_HEADER, base)?;
            let n = parse_decimal(field(rec[1], "n=", base + 1)?, base + 1)?;
            let a = parse_levels(field(rec[2], "A=", base + 2)?, base + 2)?;
            let b = parse_levels(field(rec[3], "B=", base + 3)?, base + 3)?;
            Ok(IdentitySpec::new(n, a, b))
        })
        .collect()
}

pub fn write_certificate(cert: &MatchingCertificate) -> String {
    let mut out = String::with_capacity(64 + cert.pairs.len() * 24);
    let _ = write!(
        out,
        "{CERT_HEADER}\nn={}\nA={}\nB={}\ntype={}\npairs={}\n",
        cert.n,
        join_levels(&cert.a),
        join_levels(&cert.b),
        cert.kind.name(),
        cert.pairs.len()
    );
    for (s, t) in &cert.pairs {
        let _ = writeln!(out, "{:#x} {:#x}", s.bits(), t.bits());
    }
    out
}

/// Strict parse. Only syntax and ordering are checked here; the semantic
/// checks live in [`crate::verifier`].
pub fn parse_certificate(text: &str) -> Result<MatchingCertificate> {
    let lines = split_lines(text)?;
    if lines.len() < 6 {
        return Err(Error::parse(
            lines.len() + 1,
            "truncated certificate header",
        ));
    }
    expect_exact(lines[0], CERT_HEADER, 1)?;
    let n = parse_decimal(field(lines[1], "n=", 2)?, 2)?;
    let a = parse_levels(field(lines[2], "A=", 3)?, 3)?;
    let b = parse_levels(field(lines[3], "B=", 4)?, 4)?;
    let kind = match field(lines[4], "type=", 5)? {
        "perfect" => CertificateKind::Perfect,
        "injection" => CertificateKind::Injection,
        other => return Err(Error::parse(5, format!("unknown type '{other}'"))),
    };
    let count = parse_decimal(field(lines[5], "pairs=", 6)?, 6)? as usize;
    let body = &lines[6..];
    if body.len() != count {
        return Err(Error::parse(
            7 + body.len().min(count),
            format!("declared {count} pairs, found {}", body.len()),
        ));
    }
    let mut pairs = Vec::with_capacity(count);
    let mut prev: Option<u64> = None;
    for (i, line) in body.iter().enumerate() {
        let lineno = 7 + i;
        let (s, t) = parse_pair(line, lineno)?;
        let to_mask = |bits| {
            SubsetMask::new(bits, n)
                .map_err(|_| Error::parse(lineno, format!("mask {bits:#x} has bits outside [{n}]")))
        };
        let (s, t) = (to_mask(s)?, to_mask(t)?);
        if let Some(p) = prev {
            if s.bits() <= p {
                return Err(Error::parse(
                    lineno,
                    if s.bits() == p {
                        format!("duplicate source {s}")
                    } else {
                        format!("source {s} out of ascending order")
                    },
                ));
            }
        }
        prev = Some(s.bits());
        pairs.push((s, t));
    }
    Ok(MatchingCertificate {
        n,
        a,
        b,
        kind,
        pairs,
    })
}

/// Splits on LF, rejecting CR and a missing final newline.
pub(crate) fn split_lines(text: &str) -> Result<Vec<&str>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let body = text
        .strip_suffix('\n')
        .ok_or_else(|| Error::parse(text.lines().count(), "missing final newline"))?;
    let lines: Vec<&str> = body.split('\n').collect();
    if let Some(i) = lines.iter().position(|l| l.contains('\r')) {
        return Err(Error::parse(i + 1, "carriage return in line"));
    }
    Ok(lines)
}

fn expect_exact(line: &str, want: &str, lineno: usize) -> Result<()> {
    if line == want {
        Ok(())
    } else {
        Err(Error::parse(
            lineno,
            format!("expected '{want}', found '{line}'"),
        ))
    }
}

fn field<'a>(line: &'a str, key: &str, lineno: usize) -> Result<&'a str> {
    line.strip_prefix(key)
        .ok_or_else(|| Error::parse(lineno, format!("expected '{key}…', found '{line}'")))
}

pub(crate) fn parse_decimal(s: &str, lineno: usize) -> Result<u32> {
    let canonical =
        !s.is_empty() && s.bytes().all(|c| c.is_ascii_digit()) && (s == "0" || !s.starts_with('0'));
    if !canonical {
        return Err(Error::parse(
            lineno,
            format!("'{s}' is not a canonical decimal"),
        ));
    }
    s.parse()
        .map_err(|_| Error::parse(lineno, format!("'{s}' out of range")))
}

pub(crate) fn parse_levels(s: &str, lineno: usize) -> Result<Vec<u32>> {
    let levels = s
        .split(',')
        .map(|x| parse_decimal(x, lineno))
        .collect::<Result<Vec<_>>>()?;
    if let Some(w) = levels.windows(2).find(|w| w[0] >= w[1]) {
        let what = if w[0] == w[1] {
            "duplicate"
        } else {
            "not ascending"
        };
        return Err(Error::parse(lineno, format!("level list '{s}' is {what}")));
    }
    Ok(levels)
}

pub(crate) fn parse_hex(s: &str, lineno: usize) -> Result<u64> {
    let digits = s
        .strip_prefix("0x")
        .ok_or_else(|| Error::parse(lineno, format!("'{s}' lacks 0x prefix")))?;
    let canonical = !digits.is_empty()
        && digits
            .bytes()
            .all(|c| matches!(c, b'0'..=b'9' | b'a'..=b'f'))
        && (digits == "0" || !digits.starts_with('0'));
    if !canonical {
        return Err(Error::parse(
            lineno,
            format!("'{s}' is not canonical lowercase hex"),
        ));
    }
    u64::from_str_radix(digits, 16)
        .map_err(|_| Error::parse(lineno, format!("'{s}' exceeds 64 bits")))
}

pub(crate) fn parse_pair(line: &str, lineno: usize) -> Result<(u64, u64)> {
    let mut parts = line.split(' ');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(s), Some(t), None) => Ok((parse_hex(s, lineno)?, parse_hex(t, lineno)?)),
        _ => Err(Error::parse(
            lineno,
            format!("expected '<source> <image>', found '{line}'"),
        )),
    }
}
