//! Scenario configuration: exact rational argument parsing, preset
//! expansion, and field-level validation.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use hexflow_core::flow::Stepper;
use hexflow_core::step::TiePolicy;
use hexflow_core::wulff::WulffHexagon;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

/// Command-line failure with a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// A flag value or flag combination is invalid.
    #[error("{message}")]
    Config { message: String },
    /// Filesystem failure.
    #[error("could not write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// An input file does not match the expected schema.
    #[error("{message}")]
    Schema { message: String },
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config {
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Schema { .. } => 4,
        }
    }
}

/// A number parsed exactly: fractions ("1/64"), decimals ("0.95"), and
/// integers ("3") become rationals before any float conversion, so values
/// like tie-window positions are bit-reproducible from the command line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exact {
    /// The spelling given on the command line.
    pub raw: String,
    /// The resolved double-precision value.
    pub value: f64,
}

impl Exact {
    pub fn parse(field: &str, raw: &str) -> Result<Exact, CliError> {
        let rational = parse_rational(raw)
            .map_err(|why| CliError::config(format!("{field}: {why} (got {raw:?})")))?;
        let value = rational.numer().to_f64().unwrap() / rational.denom().to_f64().unwrap();
        Ok(Exact {
            raw: raw.to_string(),
            value,
        })
    }
}

fn parse_rational(raw: &str) -> Result<Rational64, String> {
    let s = raw.trim();
    if s.is_empty() {
        return Err("empty value".to_string());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = i64::from_str(num.trim()).map_err(|_| "numerator is not an integer")?;
        let d = i64::from_str(den.trim()).map_err(|_| "denominator is not an integer")?;
        if d == 0 {
            return Err("denominator is zero".to_string());
        }
        return Ok(Rational64::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let sign = if int.trim_start().starts_with('-') { -1 } else { 1 };
        let whole = if int.is_empty() || int == "-" {
            0
        } else {
            i64::from_str(int).map_err(|_| "integer part is not a number")?
        };
        if frac.is_empty() {
            return Ok(Rational64::from_integer(whole));
        }
        if frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err("fractional part must be 1-15 digits".to_string());
        }
        let digits = i64::from_str(frac).map_err(|_| "fractional part is not a number")?;
        let den = 10i64.pow(frac.len() as u32);
        return Ok(Rational64::from_integer(whole) + Rational64::new(sign * digits, den));
    }
    i64::from_str(s)
        .map(Rational64::from_integer)
        .map_err(|_| "not an integer, decimal, or fraction".to_string())
}

/// What a scenario runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The lattice minimizing-movement evolution at one resolution.
    Discrete,
    /// The event-driven quantized limit dynamics.
    Ode,
    /// The smooth crystalline comparison flow.
    Crystalline,
    /// Discrete-versus-limit convergence table over an ε list.
    Compare,
    /// Batch runs over an ε list or a γ list.
    Sweep,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Mode::Discrete => "discrete",
            Mode::Ode => "ode",
            Mode::Crystalline => "crystalline",
            Mode::Compare => "compare",
            Mode::Sweep => "sweep",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicyArg {
    #[default]
    Lower,
    Upper,
}

impl From<TiePolicyArg> for TiePolicy {
    fn from(v: TiePolicyArg) -> TiePolicy {
        match v {
            TiePolicyArg::Lower => TiePolicy::Lower,
            TiePolicyArg::Upper => TiePolicy::Upper,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StepperArg {
    /// Accept both `closed-form` and the manifest spelling `closed_form`.
    #[default]
    #[value(alias = "closed_form")]
    ClosedForm,
    #[value(alias = "brute_force")]
    BruteForce,
}

impl From<StepperArg> for Stepper {
    fn from(v: StepperArg) -> Stepper {
        match v {
            StepperArg::ClosedForm => Stepper::ClosedForm,
            StepperArg::BruteForce => Stepper::BruteForce,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Csv,
    Json,
}

/// The four one-command regimes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Large regular hexagon, γ = 1: the evolution is frozen from step one.
    Pinning,
    /// Self-similar shrinking of a subcritical regular hexagon, compared
    /// against the quantized limit over an ε ladder.
    WulffShrink,
    /// Long sides above threshold shortened by their moving neighbors until
    /// the regime switches.
    PartialPinning,
    /// Extinction-time sweep showing the quantized dynamics approach the
    /// crystalline flow as γ grows.
    GammaLimit,
}

/// The initial hexagon, as specified on the command line.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum InitialShape {
    /// Regular hexagon with the given side length.
    Regular { side: Exact },
    /// Origin-symmetric support triple s₁,s₂,s₃ (s₄=s₁, s₅=s₂, s₆=s₃).
    Supports { s: [Exact; 3] },
    /// Origin-symmetric side-length triple L₁,L₂,L₃.
    Lengths { l: [Exact; 3] },
}

impl InitialShape {
    /// Build the hexagon, reporting validation failures against the flag
    /// that supplied the numbers.
    pub fn hexagon(&self) -> Result<WulffHexagon, CliError> {
        let build = |field: &str, result: Result<WulffHexagon, _>| {
            result.map_err(|err| CliError::config(format!("{field}: {err}")))
        };
        match self {
            InitialShape::Regular { side } => {
                build("--regular-L", WulffHexagon::regular(side.value))
            }
            InitialShape::Supports { s } => build(
                "--supports",
                WulffHexagon::origin_symmetric([s[0].value, s[1].value, s[2].value]),
            ),
            InitialShape::Lengths { l } => build(
                "--lengths",
                WulffHexagon::symmetric_from_side_lengths([l[0].value, l[1].value, l[2].value]),
            ),
        }
    }
}

/// A validated scenario, ready to run; serialized verbatim into the
/// manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Exact>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Exact>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub eps_list: Vec<Exact>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub gamma_list: Vec<Exact>,
    pub initial: InitialShape,
    pub tie_policy: TiePolicyArg,
    pub stepper: StepperArg,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<Exact>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub format: FormatArg,
    /// Not serialized: parallelism never changes the artifacts, so manifests
    /// stay byte-identical across --jobs values.
    #[serde(skip)]
    pub jobs: usize,
}

impl Scenario {
    pub fn gamma_value(&self) -> Result<f64, CliError> {
        let g = self
            .gamma
            .as_ref()
            .ok_or_else(|| CliError::config("--gamma is required for this mode"))?;
        if !(g.value > 0.0 && g.value.is_finite()) {
            return Err(CliError::config(format!(
                "--gamma: must be positive and finite, got {}",
                g.raw
            )));
        }
        Ok(g.value)
    }

    pub fn eps_value(&self) -> Result<f64, CliError> {
        let e = self
            .eps
            .as_ref()
            .ok_or_else(|| CliError::config("--eps is required for this mode"))?;
        if !(e.value > 0.0 && e.value.is_finite()) {
            return Err(CliError::config(format!(
                "--eps: must be positive and finite, got {}",
                e.raw
            )));
        }
        Ok(e.value)
    }
}

/// Raw flag values as collected by clap, before preset expansion and
/// validation.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct ScenarioArgs {
    /// What to run.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,

    /// Named regime preset; equivalent to the matching boolean flag.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    /// Shortcut for --preset pinning.
    #[arg(long, default_value_t = false)]
    pub pinning: bool,

    /// Shortcut for --preset wulff-shrink.
    #[arg(long = "wulff-shrink", default_value_t = false)]
    pub wulff_shrink: bool,

    /// Shortcut for --preset partial-pinning.
    #[arg(long = "partial-pinning", default_value_t = false)]
    pub partial_pinning: bool,

    /// Shortcut for --preset gamma-limit.
    #[arg(long = "gamma-limit", default_value_t = false)]
    pub gamma_limit: bool,

    /// Time-step ratio γ (the step is τ = γ·ε); exact fractions accepted.
    #[arg(long)]
    pub gamma: Option<String>,

    /// Lattice spacing ε; exact fractions like 1/64 accepted.
    #[arg(long)]
    pub eps: Option<String>,

    /// Comma-separated ε values for compare or sweep mode.
    #[arg(long = "eps-list", value_delimiter = ',')]
    pub eps_list: Vec<String>,

    /// Comma-separated γ values for sweep mode.
    #[arg(long = "gamma-list", value_delimiter = ',')]
    pub gamma_list: Vec<String>,

    /// Regular initial hexagon with this side length.
    #[arg(long = "regular-L")]
    pub regular_l: Option<String>,

    /// Origin-symmetric support triple s1,s2,s3.
    #[arg(long, value_delimiter = ',')]
    pub supports: Vec<String>,

    /// Origin-symmetric side-length triple L1,L2,L3.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Vec<String>,

    /// Long side length of the two-class hexagon (with --L-short).
    #[arg(long = "L-long")]
    pub l_long: Option<String>,

    /// Short side length of the two-class hexagon (with --L-long).
    #[arg(long = "L-short")]
    pub l_short: Option<String>,

    /// How a layer-count tie is resolved.
    #[arg(long = "tie-policy", value_enum, default_value_t)]
    pub tie_policy: TiePolicyArg,

    /// Which one-step minimizer drives discrete evolutions.
    #[arg(long, value_enum, default_value_t)]
    pub stepper: StepperArg,

    /// Time horizon; defaults to four crystalline extinction times of the
    /// inscribed regular hexagon.
    #[arg(long = "t-max")]
    pub t_max: Option<String>,

    /// Output file; sibling files derive from its stem. Without it the
    /// table goes to stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,

    /// Output format; default csv, or json when --out ends in .json.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,

    /// Parallel scenario runs in sweep mode; defaults to HEXFLOW_JOBS, then
    /// the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn parse_list(field: &str, raw: &[String]) -> Result<Vec<Exact>, CliError> {
    raw.iter().map(|v| Exact::parse(field, v)).collect()
}

fn parse_triple(field: &str, raw: &[String]) -> Result<[Exact; 3], CliError> {
    if raw.len() != 3 {
        return Err(CliError::config(format!(
            "{field}: expected exactly three comma-separated values, got {}",
            raw.len()
        )));
    }
    let list = parse_list(field, raw)?;
    Ok([list[0].clone(), list[1].clone(), list[2].clone()])
}

impl ScenarioArgs {
    fn preset(&self) -> Result<Option<Preset>, CliError> {
        let mut chosen: Vec<Preset> = [
            (self.pinning, Preset::Pinning),
            (self.wulff_shrink, Preset::WulffShrink),
            (self.partial_pinning, Preset::PartialPinning),
            (self.gamma_limit, Preset::GammaLimit),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, p)| *p)
        .collect();
        if let Some(p) = self.preset {
            chosen.push(p);
        }
        chosen.dedup();
        match chosen.len() {
            0 => Ok(None),
            1 => Ok(Some(chosen[0])),
            _ => Err(CliError::config(
                "at most one preset may be selected".to_string(),
            )),
        }
    }

    /// Expand presets, parse every number exactly, and validate the
    /// combination.
    pub fn resolve(&self) -> Result<Scenario, CliError> {
        let preset = self.preset()?;
        let mut args = self.clone();

        // Presets fill only fields the user left unset.
        if let Some(p) = preset {
            let fill = |slot: &mut Option<String>, v: &str| {
                if slot.is_none() {
                    *slot = Some(v.to_string());
                }
            };
            match p {
                Preset::Pinning => {
                    args.mode.get_or_insert(Mode::Ode);
                    fill(&mut args.gamma, "1");
                    if !args.has_initial() {
                        fill(&mut args.regular_l, "3");
                    }
                }
                Preset::WulffShrink => {
                    args.mode.get_or_insert(Mode::Compare);
                    fill(&mut args.gamma, "1");
                    if !args.has_initial() {
                        fill(&mut args.regular_l, "8/5");
                    }
                    if args.eps_list.is_empty() {
                        args.eps_list = vec![
                            "1/16".to_string(),
                            "1/32".to_string(),
                            "1/64".to_string(),
                        ];
                    }
                }
                Preset::PartialPinning => {
                    args.mode.get_or_insert(Mode::Ode);
                    fill(&mut args.gamma, "1");
                    if !args.has_initial() {
                        fill(&mut args.l_long, "3");
                        fill(&mut args.l_short, "1");
                    }
                }
                Preset::GammaLimit => {
                    args.mode.get_or_insert(Mode::Sweep);
                    if !args.has_initial() {
                        fill(&mut args.regular_l, "1");
                    }
                    if args.gamma_list.is_empty() {
                        args.gamma_list = vec![
                            "10".to_string(),
                            "100".to_string(),
                            "1000".to_string(),
                            "10000".to_string(),
                        ];
                    }
                }
            }
        }

        let mode = args
            .mode
            .ok_or_else(|| CliError::config("--mode is required (or use a preset)"))?;

        let initial = args.initial_shape()?;
        let gamma = args
            .gamma
            .as_deref()
            .map(|v| Exact::parse("--gamma", v))
            .transpose()?;
        let eps = args
            .eps
            .as_deref()
            .map(|v| Exact::parse("--eps", v))
            .transpose()?;
        let eps_list = parse_list("--eps-list", &args.eps_list)?;
        let gamma_list = parse_list("--gamma-list", &args.gamma_list)?;
        let t_max = args
            .t_max
            .as_deref()
            .map(|v| Exact::parse("--t-max", v))
            .transpose()?;
        if let Some(t) = &t_max {
            if !(t.value > 0.0 && t.value.is_finite()) {
                return Err(CliError::config(format!(
                    "--t-max: must be positive and finite, got {}",
                    t.raw
                )));
            }
        }

        // Mode-specific flag requirements.
        match mode {
            Mode::Discrete => {
                if eps.is_none() {
                    return Err(CliError::config("--eps is required in discrete mode"));
                }
            }
            Mode::Compare => {
                if eps_list.is_empty() {
                    return Err(CliError::config(
                        "--eps-list is required in compare mode",
                    ));
                }
            }
            Mode::Sweep => match (eps_list.is_empty(), gamma_list.is_empty()) {
                (true, true) => {
                    return Err(CliError::config(
                        "sweep mode needs --eps-list or --gamma-list",
                    ))
                }
                (false, false) => {
                    return Err(CliError::config(
                        "sweep mode takes --eps-list or --gamma-list, not both",
                    ))
                }
                _ => {}
            },
            Mode::Ode | Mode::Crystalline => {}
        }
        for (field, vals) in [("--eps-list", &eps_list), ("--gamma-list", &gamma_list)] {
            for v in vals {
                if !(v.value > 0.0 && v.value.is_finite()) {
                    return Err(CliError::config(format!(
                        "{field}: entries must be positive, got {}",
                        v.raw
                    )));
                }
            }
        }

        let format = match (args.format, &args.out) {
            (Some(f), _) => f,
            (None, Some(path)) if path.extension().is_some_and(|e| e == "json") => {
                FormatArg::Json
            }
            _ => FormatArg::Csv,
        };

        let jobs = match args.jobs {
            Some(0) => return Err(CliError::config("--jobs: must be at least 1")),
            Some(n) => n,
            None => match std::env::var("HEXFLOW_JOBS") {
                Ok(v) => v.trim().parse::<usize>().ok().filter(|&n| n >= 1).ok_or_else(
                    || {
                        CliError::config(format!(
                            "HEXFLOW_JOBS: expected a positive integer, got {v:?}"
                        ))
                    },
                )?,
                Err(_) => std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1),
            },
        };

        Ok(Scenario {
            mode,
            preset,
            gamma,
            eps,
            eps_list,
            gamma_list,
            initial,
            tie_policy: args.tie_policy,
            stepper: args.stepper,
            t_max,
            out: args.out.clone(),
            format,
            jobs,
        })
    }

    fn has_initial(&self) -> bool {
        self.regular_l.is_some()
            || !self.supports.is_empty()
            || !self.lengths.is_empty()
            || self.l_long.is_some()
            || self.l_short.is_some()
    }

    fn initial_shape(&self) -> Result<InitialShape, CliError> {
        let mut shapes: Vec<InitialShape> = Vec::new();
        if let Some(raw) = &self.regular_l {
            shapes.push(InitialShape::Regular {
                side: Exact::parse("--regular-L", raw)?,
            });
        }
        if !self.supports.is_empty() {
            shapes.push(InitialShape::Supports {
                s: parse_triple("--supports", &self.supports)?,
            });
        }
        if !self.lengths.is_empty() {
            shapes.push(InitialShape::Lengths {
                l: parse_triple("--lengths", &self.lengths)?,
            });
        }
        match (&self.l_long, &self.l_short) {
            (Some(long), Some(short)) => {
                let l = Exact::parse("--L-long", long)?;
                let s = Exact::parse("--L-short", short)?;
                shapes.push(InitialShape::Lengths {
                    l: [l, s.clone(), s],
                });
            }
            (None, None) => {}
            _ => {
                return Err(CliError::config(
                    "--L-long and --L-short must be given together",
                ))
            }
        }
        match shapes.len() {
            0 => Err(CliError::config(
                "an initial hexagon is required: --regular-L, --supports, --lengths, \
                 or --L-long/--L-short",
            )),
            1 => Ok(shapes.pop().unwrap()),
            _ => Err(CliError::config(
                "give exactly one initial hexagon (--regular-L, --supports, --lengths, \
                 --L-long/--L-short are mutually exclusive)",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(argv: &[&str]) -> ScenarioArgs {
        use clap::Parser;
        #[derive(clap::Parser)]
        struct Wrap {
            #[command(flatten)]
            inner: ScenarioArgs,
        }
        Wrap::try_parse_from(std::iter::once("hexflow").chain(argv.iter().copied()))
            .expect("argv parses")
            .inner
    }

    #[test]
    fn fractions_decimals_and_integers_parse_exactly() {
        assert_eq!(Exact::parse("x", "1/64").unwrap().value, 1.0 / 64.0);
        assert_eq!(Exact::parse("x", "0.95").unwrap().value, 0.95);
        assert_eq!(Exact::parse("x", "3").unwrap().value, 3.0);
        assert_eq!(Exact::parse("x", "-7/4").unwrap().value, -1.75);
        assert_eq!(Exact::parse("x", "8/5").unwrap().value, 1.6);
        for bad in ["", "1/0", "x", "1.2.3", "1/two"] {
            assert!(Exact::parse("x", bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn the_fraction_and_its_decimal_agree_bit_for_bit() {
        // 1/64 is dyadic: both spellings resolve to the same float.
        assert_eq!(
            Exact::parse("x", "1/64").unwrap().value,
            Exact::parse("x", "0.015625").unwrap().value
        );
    }

    #[test]
    fn presets_fill_only_unset_fields() {
        let s = args(&["--pinning"]).resolve().unwrap();
        assert_eq!(s.mode, Mode::Ode);
        assert_eq!(s.gamma.as_ref().unwrap().raw, "1");
        assert!(matches!(&s.initial, InitialShape::Regular { side } if side.raw == "3"));

        let s = args(&["--pinning", "--gamma", "2", "--regular-L", "5"])
            .resolve()
            .unwrap();
        assert_eq!(s.gamma.as_ref().unwrap().raw, "2");
        assert!(matches!(&s.initial, InitialShape::Regular { side } if side.raw == "5"));

        let s = args(&["--partial-pinning", "--L-long", "3", "--L-short", "1"])
            .resolve()
            .unwrap();
        assert!(matches!(&s.initial, InitialShape::Lengths { l } if l[0].raw == "3"));

        let s = args(&["--gamma-limit"]).resolve().unwrap();
        assert_eq!(s.mode, Mode::Sweep);
        assert_eq!(s.gamma_list.len(), 4);

        let s = args(&["--wulff-shrink"]).resolve().unwrap();
        assert_eq!(s.mode, Mode::Compare);
        assert_eq!(s.eps_list.len(), 3);
    }

    #[test]
    fn conflicting_or_missing_flags_are_rejected_with_field_names() {
        let cases: Vec<(Vec<&str>, &str)> = vec![
            (vec!["--mode", "discrete", "--gamma", "1", "--regular-L", "1"], "--eps"),
            (vec!["--mode", "ode", "--gamma", "1"], "initial hexagon"),
            (
                vec!["--mode", "ode", "--gamma", "1", "--regular-L", "1", "--lengths", "1,1,1"],
                "exactly one initial",
            ),
            (
                vec!["--mode", "compare", "--gamma", "1", "--regular-L", "1"],
                "--eps-list",
            ),
            (
                vec!["--mode", "sweep", "--gamma", "1", "--regular-L", "1"],
                "--eps-list or --gamma-list",
            ),
            (
                vec!["--mode", "ode", "--gamma", "1", "--L-long", "3"],
                "--L-long and --L-short",
            ),
            (vec!["--pinning", "--gamma-limit"], "at most one preset"),
            // `=` keeps clap from reading the negative value as a flag.
            (
                vec!["--mode", "ode", "--gamma=-1", "--regular-L", "1"],
                "--gamma",
            ),
        ];
        for (argv, needle) in cases {
            let err = match args(&argv).resolve() {
                Err(e) => e.to_string(),
                Ok(s) => {
                    // Value-level checks happen at use time for gamma.
                    s.gamma_value().unwrap_err().to_string()
                }
            };
            assert!(err.contains(needle), "{argv:?}: {err:?} lacks {needle:?}");
        }
    }

    #[test]
    fn format_follows_the_output_extension() {
        let s = args(&[
            "--mode", "ode", "--gamma", "1", "--regular-L", "1", "--out", "x.json",
        ])
        .resolve()
        .unwrap();
        assert_eq!(s.format, FormatArg::Json);
        let s = args(&[
            "--mode", "ode", "--gamma", "1", "--regular-L", "1", "--out", "x.csv",
        ])
        .resolve()
        .unwrap();
        assert_eq!(s.format, FormatArg::Csv);
    }
}
