//! Run configuration: TOML ingestion with line/column diagnostics.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::{Spanned, Value};

use crate::expr::{parse_expression, Expr, ParseError, Scope};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Validate,
    Certify,
    Sweep,
    Iss,
    AlphaStar,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Validate => "validate",
            Mode::Certify => "certify",
            Mode::Sweep => "sweep",
            Mode::Iss => "iss",
            Mode::AlphaStar => "alpha-star",
        }
    }

    pub fn from_name(name: &str) -> Option<Mode> {
        [
            Mode::Validate,
            Mode::Certify,
            Mode::Sweep,
            Mode::Iss,
            Mode::AlphaStar,
        ]
        .into_iter()
        .find(|m| m.name() == name)
    }
}

/// Sampling grid for falsification and pointwise decrease checks.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    /// Defaults to the example's radius.
    pub radius: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub trajectories: usize,
    /// Defaults to the example's horizon.
    pub horizon: Option<f64>,
    /// Defaults to `2 T α`.
    pub t0_max: Option<f64>,
    pub stride: f64,
    pub margin_tol: f64,
    /// How many trajectories per `α` are written as CSV.
    pub csv_trajectories: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaStarConfig {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IssConfig {
    /// One expression in `t, x1..xn` per input channel; `None` means
    /// `0.1*sin(t)` on every channel.
    pub input: Option<Vec<Expr>>,
    pub x0: Option<Vec<f64>>,
    pub t0: f64,
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: bool,
    pub text: bool,
}

/// A user-defined system written in the expression language.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomSpec {
    pub states: usize,
    pub params: usize,
    pub field: Vec<Expr>,
    pub control: Option<Vec<Vec<Expr>>>,
    pub path: Vec<Expr>,
    pub path_period: Option<f64>,
    pub path_horizon: Option<(f64, f64)>,
    pub p_bar: Option<f64>,
    pub v: Expr,
    pub alpha1: Expr,
    pub alpha2: Expr,
    pub q: Expr,
    pub c_a: f64,
    pub c_b: f64,
    pub window: f64,
    pub m_bar: Option<f64>,
    pub radius: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub example: String,
    /// Empty means "use the example's test values".
    pub alpha_list: Vec<f64>,
    pub grid: GridConfig,
    pub simulation: SimConfig,
    pub alpha_star: AlphaStarConfig,
    pub iss: IssConfig,
    pub output: OutputConfig,
    pub custom: Option<CustomSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<Spanned<String>>,
    example: Spanned<String>,
    alpha_list: Option<Spanned<Vec<f64>>>,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    simulation: RawSim,
    #[serde(default)]
    alpha_star: RawAlphaStar,
    #[serde(default)]
    iss: RawIss,
    #[serde(default)]
    output: RawOutput,
    custom: Option<Spanned<RawCustom>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    radius: Option<Spanned<f64>>,
    samples: Option<Spanned<usize>>,
    seed: Option<u64>,
    t_max: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSim {
    trajectories: Option<usize>,
    horizon: Option<Spanned<f64>>,
    t0_max: Option<Spanned<f64>>,
    stride: Option<Spanned<f64>>,
    margin_tol: Option<Spanned<f64>>,
    csv_trajectories: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawAlphaStar {
    lo: Option<Spanned<f64>>,
    hi: Option<Spanned<f64>>,
    iterations: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawIss {
    input: Option<Vec<Spanned<String>>>,
    x0: Option<Vec<f64>>,
    t0: Option<f64>,
    horizon: Option<Spanned<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    formats: Option<Spanned<Vec<String>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCustom {
    states: Spanned<usize>,
    params: Spanned<usize>,
    field: Spanned<Vec<Spanned<String>>>,
    control: Option<Spanned<Vec<Vec<Spanned<String>>>>>,
    path: Spanned<Vec<Spanned<String>>>,
    path_period: Option<Spanned<Value>>,
    path_horizon: Option<[Spanned<Value>; 2]>,
    p_bar: Option<Spanned<Value>>,
    #[serde(rename = "V")]
    v: Spanned<String>,
    alpha1: Spanned<String>,
    alpha2: Spanned<String>,
    q: Spanned<String>,
    c_a: Spanned<Value>,
    c_b: Spanned<Value>,
    window: Spanned<Value>,
    m_bar: Option<Spanned<Value>>,
    radius: Option<Spanned<Value>>,
    horizon: Option<Spanned<Value>>,
}

/// The configuration text with its origin, for locating errors.
pub struct Source<'a> {
    pub path: &'a str,
    pub text: &'a str,
}

impl Source<'_> {
    /// 1-based line and column of a byte offset.
    pub fn locate(&self, offset: usize) -> (usize, usize) {
        let offset = offset.min(self.text.len());
        let before = &self.text[..offset];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    }

    pub fn error_at(&self, offset: usize, message: impl Into<String>) -> CliError {
        let (line, column) = self.locate(offset);
        CliError::Parse {
            path: self.path.to_string(),
            line,
            column,
            message: message.into(),
        }
    }

    fn spanned_error<T>(&self, s: &Spanned<T>, message: impl Into<String>) -> CliError {
        self.error_at(s.span().start, message)
    }

    /// Parses a string value, mapping expression offsets back into the file.
    fn expr(&self, s: &Spanned<String>, scope: Scope) -> Result<Expr, CliError> {
        parse_expression(s.get_ref(), scope).map_err(|e: ParseError| {
            let start = s.span().start;
            let quote = self.text[start..].starts_with(['"', '\'']) as usize;
            self.error_at(
                start + quote + e.offset,
                format!("in expression: {}", e.message),
            )
        })
    }

    /// A number given either literally or as a constant expression such as
    /// `"2*pi"`.
    fn number(&self, v: &Spanned<Value>, what: &str) -> Result<f64, CliError> {
        match v.get_ref() {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            Value::String(s) => {
                let spanned = Spanned::new(v.span(), s.clone());
                let scope = Scope {
                    states: 0,
                    params: 0,
                    time: false,
                    scalar: false,
                };
                Ok(self.expr(&spanned, scope)?.eval(&Default::default()))
            }
            other => Err(self.spanned_error(
                v,
                format!("{what} must be a number, got {}", other.type_str()),
            )),
        }
    }
}

fn positive(src: &Source, v: &Spanned<f64>, what: &str) -> Result<f64, CliError> {
    let x = *v.get_ref();
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(src.spanned_error(v, format!("{what} must be positive and finite, got {x}")))
    }
}

/// Parses a configuration for `mode`. `path` is used only in messages.
pub fn parse_config(text: &str, path: &str, mode: Mode) -> Result<RunConfig, CliError> {
    let src = Source { path, text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let offset = e.span().map_or(0, |s| s.start);
        src.error_at(offset, e.message().trim().to_string())
    })?;

    if let Some(m) = &raw.mode {
        match Mode::from_name(m.get_ref()) {
            Some(found) if found == mode => {}
            Some(found) => {
                return Err(src.spanned_error(
                    m,
                    format!(
                        "file requests mode '{}' but '{}' was invoked",
                        found.name(),
                        mode.name()
                    ),
                ))
            }
            None => return Err(src.spanned_error(m, format!("unknown mode '{}'", m.get_ref()))),
        }
    }

    let example = raw.example.get_ref().clone();
    let custom = match (&raw.custom, example.as_str()) {
        (Some(c), "custom") => Some(custom_spec(&src, c.get_ref())?),
        (None, "custom") => {
            return Err(src.spanned_error(
                &raw.example,
                "example = \"custom\" needs a [custom] section",
            ))
        }
        (Some(c), _) => {
            return Err(src.spanned_error(c, "a [custom] section requires example = \"custom\""))
        }
        (None, name) => {
            if !crate::bundles::NAMES.contains(&name) {
                return Err(src.spanned_error(
                    &raw.example,
                    format!(
                        "unknown example '{name}'; expected custom or one of {}",
                        crate::bundles::NAMES.join(", ")
                    ),
                ));
            }
            None
        }
    };

    let alpha_list = match &raw.alpha_list {
        None => Vec::new(),
        Some(list) => {
            if list.get_ref().is_empty() {
                return Err(src.spanned_error(list, "alpha_list must not be empty"));
            }
            if let Some(bad) = list
                .get_ref()
                .iter()
                .find(|a| !(**a > 0.0 && a.is_finite()))
            {
                return Err(src.spanned_error(
                    list,
                    format!("alpha_list entries must be positive, got {bad}"),
                ));
            }
            list.get_ref().clone()
        }
    };

    let g = &raw.grid;
    let grid = GridConfig {
        radius: g
            .radius
            .as_ref()
            .map(|r| positive(&src, r, "grid.radius"))
            .transpose()?,
        samples: match &g.samples {
            Some(s) if *s.get_ref() == 0 => {
                return Err(src.spanned_error(s, "grid.samples must be at least 1"))
            }
            Some(s) => *s.get_ref(),
            None => 100_000,
        },
        seed: g.seed.unwrap_or(0),
        t_max: g
            .t_max
            .as_ref()
            .map(|r| positive(&src, r, "grid.t_max"))
            .transpose()?,
    };

    let s = &raw.simulation;
    let simulation = SimConfig {
        trajectories: s.trajectories.unwrap_or(20),
        horizon: s
            .horizon
            .as_ref()
            .map(|h| positive(&src, h, "simulation.horizon"))
            .transpose()?,
        t0_max: match &s.t0_max {
            Some(v) if *v.get_ref() < 0.0 => {
                return Err(src.spanned_error(v, "simulation.t0_max must be nonnegative"))
            }
            other => other.as_ref().map(|v| *v.get_ref()),
        },
        stride: s
            .stride
            .as_ref()
            .map(|h| positive(&src, h, "simulation.stride"))
            .transpose()?
            .unwrap_or(0.01),
        margin_tol: match &s.margin_tol {
            Some(v) if !(*v.get_ref() >= 0.0) => {
                return Err(src.spanned_error(v, "simulation.margin_tol must be nonnegative"))
            }
            other => other.as_ref().map_or(1e-6, |v| *v.get_ref()),
        },
        csv_trajectories: s.csv_trajectories.unwrap_or(1),
    };

    let a = &raw.alpha_star;
    let alpha_star = AlphaStarConfig {
        lo: a
            .lo
            .as_ref()
            .map(|v| positive(&src, v, "alpha_star.lo"))
            .transpose()?,
        hi: a
            .hi
            .as_ref()
            .map(|v| positive(&src, v, "alpha_star.hi"))
            .transpose()?,
        iterations: a.iterations.unwrap_or(20),
    };
    if let (Some(lo), Some(hi), Some(span)) = (alpha_star.lo, alpha_star.hi, &a.hi) {
        if hi <= lo {
            return Err(
                src.spanned_error(span, format!("alpha_star.hi = {hi} must exceed lo = {lo}"))
            );
        }
    }

    let i = &raw.iss;
    let states = custom.as_ref().map_or(usize::MAX, |c| c.states);
    let iss = IssConfig {
        input: i
            .input
            .as_ref()
            .map(|list| {
                let scope = Scope {
                    states,
                    params: 0,
                    time: true,
                    scalar: false,
                };
                list.iter()
                    .map(|e| src.expr(e, scope))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?,
        x0: i.x0.clone(),
        t0: i.t0.unwrap_or(0.0),
        horizon: i
            .horizon
            .as_ref()
            .map(|h| positive(&src, h, "iss.horizon"))
            .transpose()?,
    };

    let o = &raw.output;
    let (mut csv, mut text) = (true, true);
    if let Some(formats) = &o.formats {
        csv = false;
        text = false;
        for f in formats.get_ref() {
            match f.as_str() {
                "csv" => csv = true,
                "text" => text = true,
                other => {
                    return Err(src.spanned_error(
                        formats,
                        format!("unknown output format '{other}'; expected csv or text"),
                    ))
                }
            }
        }
    }
    let output = OutputConfig {
        dir: PathBuf::from(o.dir.clone().unwrap_or_else(|| "slowcert-out".into())),
        csv,
        text,
    };

    Ok(RunConfig {
        mode,
        example,
        alpha_list,
        grid,
        simulation,
        alpha_star,
        iss,
        output,
        custom,
    })
}

fn custom_spec(src: &Source, c: &RawCustom) -> Result<CustomSpec, CliError> {
    let n = *c.states.get_ref();
    let d = *c.params.get_ref();
    if n == 0 {
        return Err(src.spanned_error(&c.states, "custom.states must be at least 1"));
    }
    let field_scope = Scope::field(n, d);
    let list = |v: &Spanned<Vec<Spanned<String>>>, len: usize, what: &str, scope: Scope| {
        if v.get_ref().len() != len {
            return Err(src.spanned_error(
                v,
                format!("{what} needs {len} entries, got {}", v.get_ref().len()),
            ));
        }
        v.get_ref()
            .iter()
            .map(|e| src.expr(e, scope))
            .collect::<Result<Vec<_>, _>>()
    };
    let field = list(&c.field, n, "custom.field", field_scope)?;
    let path = list(&c.path, d, "custom.path", Scope::time())?;

    let control = match &c.control {
        None => None,
        Some(rows) => {
            if rows.get_ref().len() != n {
                return Err(src.spanned_error(rows, format!("custom.control needs {n} rows")));
            }
            let m = rows.get_ref()[0].len();
            if m == 0 || rows.get_ref().iter().any(|r| r.len() != m) {
                return Err(src.spanned_error(
                    rows,
                    "custom.control rows must all have the same positive length",
                ));
            }
            let parsed = rows
                .get_ref()
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|e| src.expr(e, field_scope))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(parsed)
        }
    };

    let opt_num = |v: &Option<Spanned<Value>>, what: &str| {
        v.as_ref().map(|v| src.number(v, what)).transpose()
    };
    let path_period = opt_num(&c.path_period, "custom.path_period")?;
    let path_horizon = match &c.path_horizon {
        Some([lo, hi]) => Some((
            src.number(lo, "custom.path_horizon")?,
            src.number(hi, "custom.path_horizon")?,
        )),
        None => None,
    };
    if path_period.is_none() && path_horizon.is_none() {
        return Err(src.spanned_error(&c.path, "custom.path needs path_period or path_horizon"));
    }
    let window = src.number(&c.window, "custom.window")?;
    if !(window > 0.0) {
        return Err(src.spanned_error(&c.window, "custom.window must be positive"));
    }

    Ok(CustomSpec {
        states: n,
        params: d,
        field,
        control,
        path,
        path_period,
        path_horizon,
        p_bar: opt_num(&c.p_bar, "custom.p_bar")?,
        v: src.expr(&c.v, field_scope)?,
        alpha1: src.expr(&c.alpha1, Scope::scalar())?,
        alpha2: src.expr(&c.alpha2, Scope::scalar())?,
        q: src.expr(
            &c.q,
            Scope {
                states: 0,
                params: d,
                time: false,
                scalar: false,
            },
        )?,
        c_a: src.number(&c.c_a, "custom.c_a")?,
        c_b: src.number(&c.c_b, "custom.c_b")?,
        window,
        m_bar: opt_num(&c.m_bar, "custom.m_bar")?,
        radius: opt_num(&c.radius, "custom.radius")?.unwrap_or(10.0),
        horizon: opt_num(&c.horizon, "custom.horizon")?.unwrap_or(20.0),
    })
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path, mode: Mode) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string(), mode)
}

/// A documented configuration with every default spelled out.
pub fn template(example: &str) -> String {
    let mut out = format!(
        r#"# slowcert run configuration
#
# Run with: slowcert <validate|certify|sweep|iss|alpha-star> --config THIS_FILE
# The mode is chosen on the command line; `mode = "..."` here is optional
# and must agree with it when present.

# One of: {names}, or "custom" (see the [custom] section).
example = "{example}"

# Time-scale values for certify, sweep and iss. When omitted the example's
# own test values are used.
# alpha_list = [0.1, 1.0, 10.0]

[grid]
# Falsification and pointwise checks sample x in [-radius, radius]^n,
# t in [0, t_max] and s over the averaging window.
# radius = 10.0          # default: the example's radius
samples = 100000
seed = 0                 # overridden by --seed; always recorded in outputs
# t_max = 100.0          # default: 20 max(T, 1) alpha

[simulation]
trajectories = 20        # seeded initial conditions per alpha
# horizon = 30.0         # default: the example's horizon
# t0_max = 10.0          # initial times in [0, t0_max]; default 2 T alpha
stride = 0.01            # dense-output spacing of trajectory samples
margin_tol = 1e-6        # absolute slack of the discrete decrease check
csv_trajectories = 1     # trajectories per alpha written as CSV

[alpha_star]
# Log-scale bisection bracket; defaults to [1e-6 threshold, 2 threshold]
# or [1e-3, 10] when the analytic threshold is zero.
# lo = 0.01
# hi = 100.0
iterations = 20

[iss]
# One expression in t and x1..xn per input channel.
# input = ["0.1*sin(t)"]  # default on every channel
# x0 = [1.0, 0.0]         # default: first coordinate 1, others 0
t0 = 0.0
# horizon = 200.0         # default: the example's horizon

[output]
dir = "slowcert-out"     # overridden by --out
formats = ["csv", "text"]
"#,
        names = crate::bundles::NAMES.join(", "),
        example = example,
    );
    if example == "custom" {
        out.push_str(CUSTOM_TEMPLATE);
    }
    out
}

const CUSTOM_TEMPLATE: &str = r#"
# A user-defined system. Expressions use + - * / ^, unary minus, parentheses,
# sin cos tan exp log sqrt tanh abs, the constants pi and e, and the names
# listed for each entry. There are no conditionals.
[custom]
states = 1                               # n
params = 1                               # d
# f(x, t, tau), one entry per state; names x1..xn, t, tau1..taud
field = ["x1/sqrt(1+x1^2)*(1-90*tau1)"]
# optional control matrix g(x, t, tau) as n rows of m entries
# control = [["1"]]
# p(r), one entry per parameter; the slow time r is written t
path = ["cos(t)^2"]
path_period = "pi"                       # or path_horizon = [lo, hi]
# p_bar = 1.0                            # sup |p'|; estimated when omitted
# V(x, t, tau); derivatives are taken by central differences
V = "exp(sqrt(1+x1^2)) - e"
alpha1 = "exp(sqrt(1+s^2)) - e"          # comparison functions of s = |x|
alpha2 = "exp(sqrt(1+s^2)) - e"
q = "45*tau1 - 2*exp(sqrt(2))/(e-1)"     # q(tau)
c_a = 0.0
c_b = "pi*(45/2 - 2*exp(sqrt(2))/(e-1))"
window = "pi"                            # T
# m_bar = 40.3                           # sup |q(p)|; estimated when omitted
radius = 10.0
horizon = 20.0
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_parse() {
        for name in crate::bundles::NAMES.iter().chain(&["custom"]) {
            let cfg = parse_config(&template(name), "t.toml", Mode::Certify).unwrap();
            assert_eq!(cfg.example, *name);
            assert_eq!(cfg.grid.samples, 100_000);
        }
    }

    #[test]
    fn errors_point_at_line_and_column() {
        let text = "example = \"scalar\"\n[grid]\nsamples = \"many\"\n";
        match parse_config(text, "c.toml", Mode::Validate).unwrap_err() {
            CliError::Parse { line, column, .. } => assert_eq!((line, column), (3, 11)),
            e => panic!("{e}"),
        }
        let text = template("custom").replace(r#"field = ["x1/sqrt"#, r#"field = ["foo + x1/sqrt"#);
        let line_no = text.lines().position(|l| l.starts_with("field =")).unwrap() + 1;
        match parse_config(&text, "c.toml", Mode::Validate).unwrap_err() {
            CliError::Parse {
                line,
                column,
                message,
                ..
            } => {
                assert_eq!((line, column), (line_no, 11), "{message}");
                assert!(message.contains("foo"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_keys_and_examples_rejected() {
        assert!(parse_config("example = \"scalar\"\nbogus = 1\n", "c", Mode::Validate).is_err());
        assert!(parse_config("example = \"nope\"\n", "c", Mode::Validate).is_err());
        assert!(parse_config(
            "example = \"scalar\"\nalpha_list = []\n",
            "c",
            Mode::Certify
        )
        .is_err());
        assert!(
            parse_config("example = \"scalar\"\nmode = \"iss\"\n", "c", Mode::Certify).is_err()
        );
    }

    #[test]
    fn constant_expressions_as_numbers() {
        let cfg = parse_config(&template("custom"), "t", Mode::Validate).unwrap();
        let c = cfg.custom.unwrap();
        assert_eq!(c.window, std::f64::consts::PI);
        assert!((c.c_b - 55.64504575213465).abs() < 1e-12);
    }
}
