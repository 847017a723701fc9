//! Text artifacts: one versioned header line, then a pretty-printed JSON body.
//!
//! ```text
//! rakelab instance v1 TT1_2
//! { ... }
//! ```

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problems::{Instance, ProblemId, SolutionCert};

pub const FORMAT_VERSION: u32 = 1;

/// Parsed header line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Header {
    pub kind: String,
    pub version: u32,
    pub problem: Option<String>,
}

impl Header {
    fn render(&self) -> String {
        match &self.problem {
            Some(p) => format!("rakelab {} v{} {p}", self.kind, self.version),
            None => format!("rakelab {} v{}", self.kind, self.version),
        }
    }

    fn parse(line: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed header line {line:?}"));
        let mut parts = line.split_whitespace();
        if parts.next() != Some("rakelab") {
            return Err(bad());
        }
        let kind = parts.next().ok_or_else(bad)?.to_string();
        let version = parts.next().and_then(|v| v.strip_prefix('v')).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let problem = parts.next().map(str::to_string);
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Header { kind, version, problem })
    }
}

/// Renders an artifact of the given kind.
pub fn render<T: Serialize>(kind: &str, problem: Option<&ProblemId>, body: &T) -> Result<String> {
    let header = Header { kind: kind.into(), version: FORMAT_VERSION, problem: problem.map(|p| p.to_string()) };
    let json = serde_json::to_string_pretty(body).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(format!("{}\n{json}\n", header.render()))
}

/// Parses an artifact, checking its kind and version.
pub fn parse<T: DeserializeOwned>(kind: &str, text: &str) -> Result<(Header, T)> {
    let (line, body) = text.split_once('\n').unwrap_or((text, ""));
    let header = Header::parse(line.trim_end())?;
    if header.kind != kind {
        return Err(Error::Parse(format!("expected a {kind} artifact, found {}", header.kind)));
    }
    if header.version != FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported format version v{}", header.version)));
    }
    let value = serde_json::from_str(body).map_err(|e| Error::Parse(e.to_string()))?;
    Ok((header, value))
}

fn problem_of(header: &Header) -> Result<ProblemId> {
    header.problem.as_deref().ok_or_else(|| Error::Parse(format!("{} artifact lacks a problem id", header.kind)))?.parse()
}

pub fn render_instance(pid: &ProblemId, inst: &Instance) -> Result<String> {
    render("instance", Some(pid), inst)
}

pub fn parse_instance(text: &str) -> Result<(ProblemId, Instance)> {
    let (h, inst) = parse("instance", text)?;
    Ok((problem_of(&h)?, inst))
}

pub fn render_certificate(pid: &ProblemId, cert: &SolutionCert) -> Result<String> {
    render("certificate", Some(pid), cert)
}

pub fn parse_certificate(text: &str) -> Result<(ProblemId, SolutionCert)> {
    let (h, cert) = parse("certificate", text)?;
    Ok((problem_of(&h)?, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::pattern_corpus;
    use crate::problems::Bound;

    #[test]
    fn instances_round_trip() {
        let pid = ProblemId::Tt1(Bound::Fixed(3));
        for f in pattern_corpus() {
            let text = render_instance(&pid, &Instance::tree(f)).unwrap();
            let (p, inst) = parse_instance(&text).unwrap();
            assert_eq!(p, pid);
            assert_eq!(render_instance(&p, &inst).unwrap(), text);
        }
    }

    #[test]
    fn headers_are_checked() {
        assert!(matches!(parse::<u32>("certificate", "rakelab instance v1 TT1_2\n3"), Err(Error::Parse(_))));
        assert!(matches!(parse::<u32>("x", "rakelab x v9\n3"), Err(Error::Parse(_))));
        assert!(matches!(parse::<u32>("x", "garbage\n3"), Err(Error::Parse(_))));
        assert_eq!(parse::<u32>("x", "rakelab x v1\n3").unwrap().1, 3);
    }
}
