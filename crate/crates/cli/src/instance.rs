//! Plain-text instance files.
//!
//! Format, one directive per line (`#` starts a comment anywhere):
//!
//! ```text
//! # a four-vertex chain with one field
//! n 4
//! J 0 1 2.0
//! J 1 2 2.0
//! J 2 3 -2.0
//! h 0 1.0
//! ```
//!
//! `n <count>` must appear once, before any `J` or `h`.  `J x y value` sets
//! a coupling (each unordered pair at most once, no self-loops); `h x value`
//! sets a field (each vertex at most once; unset fields are zero).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use ptsa_core::ising::{InstanceError, IsingInstance};
use thiserror::Error;

/// Errors from reading, parsing, or validating an instance file.
#[derive(Debug, Error)]
pub enum InstanceFileError {
    /// The file could not be read.
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    /// A line failed to parse; `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    /// No `n <count>` directive was found.
    #[error("no `n <count>` directive found")]
    MissingHeader,
    /// The assembled instance failed semantic validation.
    #[error(transparent)]
    Invalid(#[from] InstanceError),
}

fn parse_token<T: std::str::FromStr>(
    line: usize,
    tokens: &mut std::str::SplitWhitespace<'_>,
    what: &str,
) -> Result<T, InstanceFileError> {
    let raw = tokens.next().ok_or_else(|| InstanceFileError::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    raw.parse().map_err(|_| InstanceFileError::Parse {
        line,
        message: format!("cannot parse {what} from {raw:?}"),
    })
}

fn check_vertex(line: usize, x: usize, n: usize) -> Result<(), InstanceFileError> {
    if x >= n {
        Err(InstanceFileError::Parse {
            line,
            message: format!("vertex {x} out of range (n = {n})"),
        })
    } else {
        Ok(())
    }
}

/// Parses instance text.  See the module docs for the format.
pub fn parse_instance(text: &str) -> Result<IsingInstance, InstanceFileError> {
    let mut n: Option<usize> = None;
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut fields: Vec<f64> = Vec::new();
    let mut field_seen: Vec<bool> = Vec::new();
    let mut pairs_seen: HashSet<(usize, usize)> = HashSet::new();

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let directive = tokens.next().expect("non-empty line has a first token");
        match directive {
            "n" => {
                if n.is_some() {
                    return Err(InstanceFileError::Parse {
                        line,
                        message: "duplicate `n` directive".to_string(),
                    });
                }
                let count: usize = parse_token(line, &mut tokens, "vertex count")?;
                if count == 0 {
                    return Err(InstanceFileError::Parse {
                        line,
                        message: "vertex count must be at least 1".to_string(),
                    });
                }
                fields = vec![0.0; count];
                field_seen = vec![false; count];
                n = Some(count);
            }
            "J" => {
                let n = n.ok_or(InstanceFileError::Parse {
                    line,
                    message: "`J` directive before `n`".to_string(),
                })?;
                let x: usize = parse_token(line, &mut tokens, "first vertex")?;
                let y: usize = parse_token(line, &mut tokens, "second vertex")?;
                let value: f64 = parse_token(line, &mut tokens, "coupling value")?;
                check_vertex(line, x, n)?;
                check_vertex(line, y, n)?;
                if x == y {
                    return Err(InstanceFileError::Parse {
                        line,
                        message: format!("self-coupling on vertex {x}"),
                    });
                }
                let pair = (x.min(y), x.max(y));
                if !pairs_seen.insert(pair) {
                    return Err(InstanceFileError::Parse {
                        line,
                        message: format!("duplicate coupling for pair ({}, {})", pair.0, pair.1),
                    });
                }
                edges.push((x, y, value));
            }
            "h" => {
                let n = n.ok_or(InstanceFileError::Parse {
                    line,
                    message: "`h` directive before `n`".to_string(),
                })?;
                let x: usize = parse_token(line, &mut tokens, "vertex")?;
                let value: f64 = parse_token(line, &mut tokens, "field value")?;
                check_vertex(line, x, n)?;
                if field_seen[x] {
                    return Err(InstanceFileError::Parse {
                        line,
                        message: format!("duplicate field for vertex {x}"),
                    });
                }
                field_seen[x] = true;
                fields[x] = value;
            }
            other => {
                return Err(InstanceFileError::Parse {
                    line,
                    message: format!("unknown directive {other:?} (expected n, J, or h)"),
                });
            }
        }
        if let Some(extra) = tokens.next() {
            return Err(InstanceFileError::Parse {
                line,
                message: format!("unexpected trailing token {extra:?}"),
            });
        }
    }

    let n = n.ok_or(InstanceFileError::MissingHeader)?;
    Ok(IsingInstance::new(n, &edges, &fields)?)
}

/// Reads and parses an instance file.
pub fn load_instance(path: &Path) -> Result<IsingInstance, InstanceFileError> {
    let text = std::fs::read_to_string(path).map_err(|e| InstanceFileError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_instance(&text)
}

/// Renders an instance in the canonical file format (couplings sorted,
/// zero fields omitted).  `parse_instance` round-trips the result exactly.
pub fn render_instance(instance: &IsingInstance) -> String {
    let mut out = String::new();
    writeln!(out, "n {}", instance.vertex_count()).unwrap();
    for &(x, y, j) in instance.edges() {
        writeln!(out, "J {x} {y} {j}").unwrap();
    }
    for (x, &h) in instance.fields().iter().enumerate() {
        if h != 0.0 {
            writeln!(out, "h {x} {h}").unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ptsa_core::kernels::replica_rng;

    #[test]
    fn parses_the_documented_example() {
        let text = "# a four-vertex chain with one field\nn 4\nJ 0 1 2.0\nJ 1 2 2.0\nJ 2 3 -2.0\nh 0 1.0\n";
        let instance = parse_instance(text).unwrap();
        assert_eq!(instance.vertex_count(), 4);
        assert_eq!(instance.coupling(1, 2), 2.0);
        assert_eq!(instance.coupling(3, 2), -2.0);
        assert_eq!(instance.fields(), &[1.0, 0.0, 0.0, 0.0]);
        assert!(instance.is_integer_valued());
    }

    #[test]
    fn tolerates_comments_blank_lines_and_spacing() {
        let text = "\n  # header\n n   2   # two vertices\n\nJ 1 0 -0.25# inline\n";
        let instance = parse_instance(text).unwrap();
        assert_eq!(instance.coupling(0, 1), -0.25);
    }

    #[test]
    fn round_trips_random_instances() {
        for seed in 0..10u64 {
            let mut rng = replica_rng(seed);
            let instance = ptsa_core::ising::IsingInstance::random(6, 0.5, &mut rng);
            let reparsed = parse_instance(&render_instance(&instance)).unwrap();
            assert_eq!(reparsed, instance);
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases: Vec<(&str, usize, &str)> = vec![
            ("n 2\nn 3\n", 2, "duplicate `n`"),
            ("J 0 1 1.0\n", 1, "before `n`"),
            ("n 2\nh 0\n", 2, "missing field value"),
            ("n 2\nJ 0 2 1.0\n", 2, "out of range"),
            ("n 2\nJ 1 1 1.0\n", 2, "self-coupling"),
            ("n 3\nJ 0 1 1.0\nJ 1 0 2.0\n", 3, "duplicate coupling"),
            ("n 2\nh 1 1.0\nh 1 2.0\n", 3, "duplicate field"),
            ("n 2\nspin 0 1\n", 2, "unknown directive"),
            ("n 2\nJ 0 1 1.0 extra\n", 2, "trailing token"),
            ("n 2\nJ 0 1 fast\n", 2, "cannot parse coupling value"),
            ("n 0\n", 1, "at least 1"),
        ];
        for (text, want_line, want_fragment) in cases {
            match parse_instance(text) {
                Err(InstanceFileError::Parse { line, message }) => {
                    assert_eq!(line, want_line, "{text:?}");
                    assert!(
                        message.contains(want_fragment),
                        "{text:?}: message {message:?} missing {want_fragment:?}"
                    );
                }
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
        assert!(matches!(
            parse_instance("# nothing\n"),
            Err(InstanceFileError::MissingHeader)
        ));
        // semantic validation still backstops the parser
        assert!(matches!(
            parse_instance("n 2\nh 0 inf\n"),
            Err(InstanceFileError::Invalid(_))
        ));
    }
}
