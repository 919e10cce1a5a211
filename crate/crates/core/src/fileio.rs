//! Derivator specification files.
//!
//! A spec file is a TOML document with the fields `name`, `segments`
//! (`[{from, slope}]`), `atoms` (`[{at, mass}]`), and `families`. Every
//! numeric field accepts a decimal literal or a rational string such as
//! `"7/24"`, evaluated exactly where the representation permits. A file may
//! also bundle named expressions under `[expressions]`.
//!
//! ```toml
//! name = "paper_g"
//! segments = [{ from = 0, slope = 1 }]
//!
//! [[families]]
//! accumulation = 0
//! side = "right-of"
//! position = { form = "acc+c/n^p", c = 1, p = 1 }
//! mass = { form = "s*q^n", s = 1, q = "1/2" }
//! n_start = 1
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::calculus::{parse_expr, parse_number, Expr};
use crate::derivator::{
    Atom, Derivator, FamilySide, JumpFamily, MassRule, PositionRule, Segment,
};
use crate::error::Error;
use crate::Result;

/// A number that deserializes from a TOML number or a rational string.
#[derive(Debug, Clone, Copy)]
struct Num(f64);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or a rational string like \"7/24\"")
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Num, E> {
                parse_number(v).map(Num).map_err(E::custom)
            }
        }
        de.deserialize_any(V)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentSpec {
    from: Num,
    slope: Num,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomSpec {
    at: Num,
    mass: Num,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PositionSpec {
    form: String,
    c: Num,
    p: Num,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MassSpec {
    form: String,
    s: Num,
    #[serde(default)]
    q: Option<Num>,
    #[serde(default)]
    p: Option<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilySpec {
    accumulation: Num,
    side: String,
    position: PositionSpec,
    mass: MassSpec,
    n_start: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DerivatorSpec {
    name: String,
    segments: Vec<SegmentSpec>,
    #[serde(default)]
    atoms: Vec<AtomSpec>,
    #[serde(default)]
    families: Vec<FamilySpec>,
    #[serde(default)]
    expressions: BTreeMap<String, String>,
}

/// A derivator together with any named expressions bundled in its file.
#[derive(Debug, Clone)]
pub struct FixtureBundle {
    pub derivator: Derivator,
    pub expressions: BTreeMap<String, Expr>,
}

/// Parse a derivator spec from TOML text.
pub fn parse_derivator_toml(text: &str) -> Result<FixtureBundle> {
    let spec: DerivatorSpec =
        toml::from_str(text).map_err(|e| Error::Parse(format!("derivator file: {e}")))?;
    let segments = spec
        .segments
        .iter()
        .map(|s| Segment {
            from: s.from.0,
            slope: s.slope.0,
        })
        .collect();
    let atoms = spec
        .atoms
        .iter()
        .map(|a| Atom {
            at: a.at.0,
            mass: a.mass.0,
        })
        .collect();
    let mut families = Vec::with_capacity(spec.families.len());
    for f in &spec.families {
        let side = match f.side.as_str() {
            "left-of" => FamilySide::LeftOf,
            "right-of" => FamilySide::RightOf,
            other => {
                return Err(Error::Parse(format!(
                    "family side must be \"left-of\" or \"right-of\", got \"{other}\""
                )))
            }
        };
        let plus = match f.position.form.as_str() {
            "acc+c/n^p" => true,
            "acc-c/n^p" => false,
            other => {
                return Err(Error::Parse(format!(
                    "position form must be \"acc+c/n^p\" or \"acc-c/n^p\", got \"{other}\""
                )))
            }
        };
        if plus != (side == FamilySide::RightOf) {
            return Err(Error::Parse(
                "position form sign must match the side: right-of pairs with acc+c/n^p".into(),
            ));
        }
        let mass = match f.mass.form.as_str() {
            "s*q^n" => MassRule::Geometric {
                scale: f.mass.s.0,
                ratio: f
                    .mass
                    .q
                    .ok_or_else(|| Error::Parse("geometric mass needs q".into()))?
                    .0,
            },
            "s/n^p" => MassRule::Power {
                scale: f.mass.s.0,
                exponent: f
                    .mass
                    .p
                    .ok_or_else(|| Error::Parse("power mass needs p".into()))?
                    .0,
            },
            other => {
                return Err(Error::Parse(format!(
                    "mass form must be \"s*q^n\" or \"s/n^p\", got \"{other}\""
                )))
            }
        };
        families.push(JumpFamily {
            accumulation: f.accumulation.0,
            side,
            position: PositionRule {
                c: f.position.c.0,
                p: f.position.p.0,
            },
            mass,
            n_start: f.n_start,
        });
    }
    let derivator = Derivator::new(spec.name, segments, atoms, families)?;
    let mut expressions = BTreeMap::new();
    for (name, text) in &spec.expressions {
        expressions.insert(name.clone(), parse_expr(text)?);
    }
    Ok(FixtureBundle {
        derivator,
        expressions,
    })
}

/// Load a derivator spec file; `FILE` and `FILE.toml` are both accepted.
pub fn load_derivator(path: impl AsRef<Path>) -> Result<FixtureBundle> {
    let path = path.as_ref();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(first) => {
            let with_ext = path.with_extension("toml");
            std::fs::read_to_string(&with_ext).map_err(|_| {
                Error::Io(format!("cannot read {} ({first})", path.display()))
            })?
        }
    };
    parse_derivator_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivator::fixtures;

    #[test]
    fn parse_paper_g_file() {
        let text = r#"
name = "paper_g"
segments = [{ from = 0, slope = 1 }]

[[families]]
accumulation = 0
side = "right-of"
position = { form = "acc+c/n^p", c = 1, p = 1 }
mass = { form = "s*q^n", s = 1, q = "1/2" }
n_start = 1
"#;
        let bundle = parse_derivator_toml(text).unwrap();
        assert_eq!(bundle.derivator, fixtures::paper_g());
    }

    #[test]
    fn rational_literals_evaluate_exactly() {
        let text = r#"
name = "steps"
segments = [{ from = 0, slope = "1/4" }]
atoms = [{ at = "7/24", mass = "3/2" }]
"#;
        let bundle = parse_derivator_toml(text).unwrap();
        let g = bundle.derivator;
        assert_eq!(g.segments()[0].slope, 0.25);
        assert_eq!(g.atoms()[0].at, 7.0 / 24.0);
        assert_eq!(g.atoms()[0].mass, 1.5);
    }

    #[test]
    fn embedded_expressions_parse() {
        let text = r#"
name = "with_exprs"
segments = [{ from = 0, slope = 1 }]

[expressions]
square = "(* g g)"
shifted = "(+ g c:1/2)"
"#;
        let bundle = parse_derivator_toml(text).unwrap();
        assert_eq!(bundle.expressions.len(), 2);
        assert_eq!(
            bundle.expressions["square"],
            Expr::product(Expr::GVal, Expr::GVal)
        );
    }

    #[test]
    fn bad_files_rejected() {
        // mismatched side and position sign
        let text = r#"
name = "bad"
segments = [{ from = 0, slope = 1 }]

[[families]]
accumulation = 0
side = "left-of"
position = { form = "acc+c/n^p", c = 1, p = 1 }
mass = { form = "s*q^n", s = 1, q = 0.5 }
n_start = 1
"#;
        assert!(parse_derivator_toml(text).is_err());
        assert!(parse_derivator_toml("name = \"x\"").is_err());
        // negative slope rejected by the derivator invariants
        let text = r#"
name = "bad2"
segments = [{ from = 0, slope = -1 }]
"#;
        assert!(parse_derivator_toml(text).is_err());
    }
}
