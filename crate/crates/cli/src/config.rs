//! Experiment configuration files.
//!
//! A config is a TOML document with one `[[experiment]]` table per
//! experiment. See `docs/config.md` for the grammar.

use std::collections::HashSet;
use std::ops::Range;

use fracperim_core::asymptotics::SSchedule;
use fracperim_core::models::region_check;
use fracperim_core::{ManifoldModel, Point, QuadConfig, Region};
use serde::{Deserialize, Serialize};
use toml::Spanned;

/// Default quadrature of experiment stanzas. Sweeps need far less than the
/// library default of `rel_tol = 1e-8`, and the limits they extrapolate are
/// insensitive to it.
pub fn default_quad() -> QuadConfig {
    QuadConfig {
        rel_tol: 1e-5,
        ..QuadConfig::default()
    }
}

pub const DEFAULT_TOLERANCE: f64 = 0.02;

/// One validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub id: String,
    pub model: ManifoldModel,
    #[serde(rename = "E")]
    pub e: Region,
    pub omega: Region,
    pub schedule: SSchedule,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    /// Base point of `theta`; the model origin when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Point>,
    /// Radii of `theta`.
    pub radii: Vec<f64>,
    /// Distance grid of `kernel`.
    pub distances: Vec<f64>,
    /// `[k, a, b]` triples of the trigonometric test function of `equiv`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<[f64; 3]>,
    /// Probe points of `equiv`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<Point>,
    /// Relative tolerance of the seminorm comparison in `equiv`.
    pub seminorm_tolerance: f64,
    pub quad: QuadConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub message: String,
    /// 1-based position, when the error can be located in the text.
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    experiment: Vec<RawExperiment>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    id: Spanned<String>,
    model: Spanned<ManifoldModel>,
    #[serde(rename = "E")]
    e: Option<Spanned<Region>>,
    omega: Option<Spanned<Region>>,
    schedule: Option<SSchedule>,
    tolerance: Option<Spanned<f64>>,
    expected: Option<f64>,
    point: Option<Spanned<Point>>,
    radii: Option<Spanned<Vec<f64>>>,
    distances: Option<Spanned<Vec<f64>>>,
    modes: Option<Spanned<Vec<[f64; 3]>>>,
    probes: Option<Spanned<Vec<Point>>>,
    seminorm_tolerance: Option<Spanned<f64>>,
    quad: Option<Spanned<toml::Table>>,
}

#[derive(Serialize)]
struct EmitFile<'a> {
    experiment: &'a [ExperimentSpec],
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn located(text: &str, span: Option<Range<usize>>, message: String) -> ConfigError {
    match span {
        Some(r) => {
            let (line, column) = position(text, r.start);
            ConfigError {
                message,
                line: Some(line),
                column: Some(column),
            }
        }
        None => ConfigError {
            message,
            line: None,
            column: None,
        },
    }
}

/// Parse and validate a config. `env_seed` fills `quad.seed` wherever the
/// config leaves it unset.
pub fn parse_config(text: &str, env_seed: Option<u64>) -> Result<Vec<ExperimentSpec>, ConfigError> {
    let raw: RawFile = toml::from_str(text).map_err(|e| located(text, e.span(), e.message().to_string()))?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.experiment.len());
    for r in raw.experiment {
        let id = r.id.get_ref().clone();
        let key_err = |span: Range<usize>, key: &str, msg: String| located(text, Some(span), format!("experiment `{id}`, key `{key}`: {msg}"));
        if id.is_empty() {
            return Err(located(text, Some(r.id.span()), "key `id`: must not be empty".into()));
        }
        if !seen.insert(id.clone()) {
            return Err(located(text, Some(r.id.span()), format!("key `id`: duplicate experiment id `{id}`")));
        }
        let model = r.model.get_ref().clone();
        let e = match &r.e {
            Some(e) => {
                region_check(&model, e.get_ref()).map_err(|err| key_err(e.span(), "E", err.to_string()))?;
                e.get_ref().clone()
            }
            None => Region::FullSpace,
        };
        let omega = match &r.omega {
            Some(o) => {
                region_check(&model, o.get_ref()).map_err(|e| key_err(o.span(), "omega", e.to_string()))?;
                o.get_ref().clone()
            }
            None => Region::FullSpace,
        };
        let tolerance = match &r.tolerance {
            Some(t) if !(*t.get_ref() > 0.0 && t.get_ref().is_finite()) => {
                return Err(key_err(t.span(), "tolerance", "must be positive".into()));
            }
            Some(t) => *t.get_ref(),
            None => DEFAULT_TOLERANCE,
        };
        let seminorm_tolerance = match &r.seminorm_tolerance {
            Some(t) if !(*t.get_ref() > 0.0 && t.get_ref().is_finite()) => {
                return Err(key_err(t.span(), "seminorm_tolerance", "must be positive".into()));
            }
            Some(t) => *t.get_ref(),
            None => 1e-3,
        };
        let point = match &r.point {
            Some(p) => {
                model.check_point(p.get_ref()).map_err(|e| key_err(p.span(), "point", e.to_string()))?;
                Some(p.get_ref().clone())
            }
            None => None,
        };
        let positive_list = |v: &Option<Spanned<Vec<f64>>>, key: &str, default: Vec<f64>| -> Result<Vec<f64>, ConfigError> {
            match v {
                Some(l) if l.get_ref().is_empty() || l.get_ref().iter().any(|r| !(*r > 0.0 && r.is_finite())) => {
                    Err(key_err(l.span(), key, "must be a nonempty list of positive reals".into()))
                }
                Some(l) => Ok(l.get_ref().clone()),
                None => Ok(default),
            }
        };
        let radii = positive_list(&r.radii, "radii", vec![1.0, 2.0])?;
        let distances = positive_list(&r.distances, "distances", vec![0.5, 1.0, 2.0])?;
        let modes = match &r.modes {
            Some(m) => {
                if m.get_ref().iter().any(|[k, a, b]| !(k.fract() == 0.0 && *k >= 0.0 && a.is_finite() && b.is_finite())) {
                    return Err(key_err(m.span(), "modes", "entries are [k, a, b] with k a nonnegative integer".into()));
                }
                m.get_ref().clone()
            }
            None => Vec::new(),
        };
        let probes = match &r.probes {
            Some(p) => {
                for x in p.get_ref() {
                    model.check_point(x).map_err(|e| key_err(p.span(), "probes", e.to_string()))?;
                }
                p.get_ref().clone()
            }
            None => Vec::new(),
        };
        let (mut quad, explicit_seed) = match &r.quad {
            Some(q) => {
                let mut merged = toml::Table::try_from(default_quad()).expect("quad config is a table");
                merged.extend(q.get_ref().clone());
                let quad: QuadConfig = merged.try_into().map_err(|e: toml::de::Error| key_err(q.span(), "quad", e.message().to_string()))?;
                quad.validate().map_err(|e| key_err(q.span(), "quad", e.to_string()))?;
                (quad, q.get_ref().contains_key("seed"))
            }
            None => (default_quad(), false),
        };
        if let (false, Some(s)) = (explicit_seed, env_seed) {
            quad.seed = s;
        }
        out.push(ExperimentSpec {
            id,
            model,
            e,
            omega,
            schedule: r.schedule.unwrap_or_default(),
            tolerance,
            expected: r.expected,
            point,
            radii,
            distances,
            modes,
            probes,
            seminorm_tolerance,
            quad,
        });
    }
    Ok(out)
}

/// TOML text that parses back to `specs`.
pub fn emit_config(specs: &[ExperimentSpec]) -> String {
    toml::to_string(&EmitFile { experiment: specs }).expect("experiment specs serialize to TOML")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TORUS: &str = r#"
[[experiment]]
id = "torus-half"
model = { type = "flat_torus", lengths = [6.283185307179586] }
E = { type = "arc", intervals = [[0.0, 3.141592653589793]] }
"#;

    #[test]
    fn minimal_stanza_gets_defaults() {
        let specs = parse_config(TORUS, None).unwrap();
        assert_eq!(specs.len(), 1);
        let s = &specs[0];
        assert_eq!(s.omega, Region::FullSpace);
        assert_eq!(s.schedule, SSchedule::default());
        assert_eq!(s.tolerance, DEFAULT_TOLERANCE);
        assert_eq!(s.quad, default_quad());
        assert_eq!(s.radii, vec![1.0, 2.0]);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = format!("{TORUS}{TORUS}");
        let e = parse_config(&text, None).unwrap_err();
        assert!(e.message.contains("duplicate experiment id `torus-half`"), "{e}");
        assert_eq!(e.line, Some(8));
    }

    #[test]
    fn schedule_outside_the_range() {
        let text = format!("{TORUS}schedule = [1.2, 0.5, 0.1]\n");
        let e = parse_config(&text, None).unwrap_err();
        assert!(e.message.contains("s must lie in (0,1)"), "{e}");
        assert_eq!(e.line, Some(6));
    }

    #[test]
    fn syntax_errors_are_located() {
        let e = parse_config("[[experiment]]\nid = \"a\nmodel = 3\n", None).unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.column.is_some());
    }

    #[test]
    fn unknown_keys_and_bad_regions_are_named() {
        let e = parse_config(&format!("{TORUS}tolerence = 0.1\n"), None).unwrap_err();
        assert!(e.message.contains("tolerence"), "{e}");
        let bad = TORUS.replace("type = \"arc\", intervals = [[0.0, 3.141592653589793]]", "type = \"cone\", axis = [1.0], half_angle = 0.5");
        let e = parse_config(&bad, None).unwrap_err();
        assert!(e.message.contains("key `E`"), "{e}");
        let e = parse_config(&format!("{TORUS}tolerance = -1.0\n"), None).unwrap_err();
        assert!(e.message.contains("key `tolerance`"), "{e}");
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(parse_config(TORUS, Some(9)).unwrap()[0].quad.seed, 9);
        let seeded = format!("{TORUS}quad = {{ seed = 4 }}\n");
        assert_eq!(parse_config(&seeded, Some(9)).unwrap()[0].quad.seed, 4);
        let unseeded = format!("{TORUS}quad = {{ rel_tol = 1e-6 }}\n");
        let q = &parse_config(&unseeded, Some(9)).unwrap()[0].quad;
        assert_eq!((q.seed, q.rel_tol, q.diag_cutoff), (9, 1e-6, default_quad().diag_cutoff));
    }

    #[test]
    fn round_trip() {
        let text = format!(
            "{TORUS}omega = {{ type = \"complement\", of = {{ type = \"arc\", intervals = [[1.0, 2.0]] }} }}\nexpected = 1.5\nmodes = [[1, 1.0, 0.0]]\nprobes = [[0.5]]\n{}",
            "[[experiment]]\nid = \"h3\"\nmodel = { type = \"hyperbolic3\" }\nE = { type = \"full_space\" }\npoint = [0.1, 0.0, 0.0]\n"
        );
        let once = parse_config(&text, Some(3)).unwrap();
        let twice = parse_config(&emit_config(&once), None).unwrap();
        assert_eq!(once, twice);
        assert_eq!(emit_config(&twice), emit_config(&once));
    }
}
