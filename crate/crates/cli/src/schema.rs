//! Configuration keys, their types and defaults.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scenario {
    Modes,
    CouplerSweep,
    Bandwidth,
    HomDip,
    SimulateCounts,
    FitCoupling,
    FitDip,
    FpLoss,
    ReproducePaper,
}

use Scenario::*;

impl Scenario {
    pub const ALL: [Scenario; 9] =
        [Modes, CouplerSweep, Bandwidth, HomDip, SimulateCounts, FitCoupling, FitDip, FpLoss, ReproducePaper];

    pub fn name(self) -> &'static str {
        match self {
            Modes => "modes",
            CouplerSweep => "coupler-sweep",
            Bandwidth => "bandwidth",
            HomDip => "hom-dip",
            SimulateCounts => "simulate-counts",
            FitCoupling => "fit-coupling",
            FitDip => "fit-dip",
            FpLoss => "fp-loss",
            ReproducePaper => "reproduce-paper",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|sc| sc.name() == s)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Kind {
    Float,
    Int,
    Bool,
    Text,
    Choice(&'static [&'static str]),
}

impl Kind {
    fn label(self) -> String {
        match self {
            Kind::Float => "float".into(),
            Kind::Int => "integer".into(),
            Kind::Bool => "bool".into(),
            Kind::Text => "string".into(),
            Kind::Choice(opts) => format!("one of {}", opts.join("|")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Fallback {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(&'static str),
    Absent,
}

pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub default: Fallback,
    pub scenarios: &'static [Scenario],
    pub help: &'static str,
}

const GEOMETRY: &[Scenario] = &[Modes, CouplerSweep, Bandwidth];
const DELAYS: &[Scenario] = &[HomDip, SimulateCounts, FitDip];
const PHOTONS: &[Scenario] = &[HomDip, SimulateCounts];
const ALL: &[Scenario] = &Scenario::ALL;

macro_rules! key {
    ($name:literal, $kind:expr, $default:expr, $sc:expr, $help:literal) => {
        Key { name: $name, kind: $kind, default: $default, scenarios: $sc, help: $help }
    };
}

pub static KEYS: &[Key] = &[
    key!("scenario", Kind::Choice(&["modes", "coupler-sweep", "bandwidth", "hom-dip", "simulate-counts", "fit-coupling", "fit-dip", "fp-loss", "reproduce-paper"]), Fallback::Absent, ALL, "scenario to run (required)"),
    key!("seed", Kind::Int, Fallback::Int(0), ALL, "random seed; --seed overrides"),
    key!("film_thickness_nm", Kind::Float, Fallback::Float(600.0), GEOMETRY, "LN film thickness"),
    key!("etch_depth_nm", Kind::Float, Fallback::Float(150.0), GEOMETRY, "rib etch depth"),
    key!("top_width_um", Kind::Float, Fallback::Float(1.0), GEOMETRY, "rib top width"),
    key!("sidewall_angle_deg", Kind::Float, Fallback::Float(60.0), GEOMETRY, "sidewall angle from the substrate plane"),
    key!("cladding_thickness_nm", Kind::Float, Fallback::Float(1000.0), GEOMETRY, "SiO2 cladding above the slab"),
    key!("gap_um", Kind::Float, Fallback::Absent, GEOMETRY, "centre-to-centre rib distance; absent means a single rib for modes and 2.3 elsewhere"),
    key!("polarization", Kind::Choice(&["te", "tm"]), Fallback::Text("te"), GEOMETRY, "polarization family"),
    key!("grid_pitch_nm", Kind::Float, Fallback::Float(20.0), GEOMETRY, "finite-difference grid pitch"),
    key!("lateral_padding_um", Kind::Float, Fallback::Float(2.0), GEOMETRY, "cladding padding beside the ribs"),
    key!("vertical_padding_um", Kind::Float, Fallback::Float(2.0), GEOMETRY, "padding above and below the film"),
    key!("wavelength_nm", Kind::Float, Fallback::Float(1550.0), &[Modes, CouplerSweep], "solve wavelength"),
    key!("mode_count", Kind::Int, Fallback::Int(2), &[Modes], "number of modes requested"),
    key!("coupling_length_um", Kind::Float, Fallback::Absent, &[CouplerSweep, Bandwidth], "coupling length; absent means solve the supermodes"),
    key!("bend_offset_um", Kind::Float, Fallback::Float(0.0), &[CouplerSweep, Bandwidth], "extra coupling length from the bends"),
    key!("length_start_um", Kind::Float, Fallback::Float(0.0), &[CouplerSweep], "first interaction length"),
    key!("length_stop_um", Kind::Float, Fallback::Float(600.0), &[CouplerSweep], "last interaction length"),
    key!("length_step_um", Kind::Float, Fallback::Float(2.0), &[CouplerSweep], "interaction length step"),
    key!("target_ratio", Kind::Float, Fallback::Float(0.5), &[CouplerSweep, Bandwidth], "design splitting ratio"),
    key!("dispersion_slope_per_nm", Kind::Float, Fallback::Absent, &[Bandwidth], "relative coupling dispersion d ln(kappa)/d(lambda); absent means calibrate from two supermode solves 10 nm either side"),
    key!("reference_wavelength_nm", Kind::Float, Fallback::Float(1550.0), &[Bandwidth], "design wavelength"),
    key!("coupling_order", Kind::Int, Fallback::Int(0), &[Bandwidth], "half-beat branch of the design"),
    key!("interaction_length_um", Kind::Float, Fallback::Absent, &[Bandwidth], "interaction length; absent means design for target_ratio"),
    key!("scan_start_nm", Kind::Float, Fallback::Float(1530.0), &[Bandwidth], "first scan wavelength"),
    key!("scan_stop_nm", Kind::Float, Fallback::Float(1570.0), &[Bandwidth], "last scan wavelength"),
    key!("scan_step_nm", Kind::Float, Fallback::Float(0.5), &[Bandwidth], "scan step"),
    key!("ratio_tolerance", Kind::Float, Fallback::Float(0.01), &[Bandwidth], "allowed |eta - target| for the bandwidth figure"),
    key!("center_wavelength_nm", Kind::Float, Fallback::Float(1542.22), PHOTONS, "photon centre wavelength"),
    key!("bandwidth_nm", Kind::Float, Fallback::Float(1.8), PHOTONS, "photon intensity FWHM"),
    key!("source_visibility", Kind::Float, Fallback::Float(1.0), PHOTONS, "single-pair visibility of the source at a balanced splitter"),
    key!("splitting_ratio", Kind::Float, Fallback::Float(0.5), PHOTONS, "cross-port power fraction of the chip coupler"),
    key!("delay_start_ps", Kind::Float, Fallback::Float(-6.0), DELAYS, "first delay"),
    key!("delay_stop_ps", Kind::Float, Fallback::Float(6.0), DELAYS, "last delay"),
    key!("delay_points", Kind::Int, Fallback::Int(50), DELAYS, "number of delays"),
    key!("stage_pass", Kind::Choice(&["single", "double"]), Fallback::Text("single"), DELAYS, "optical passes over the delay stage"),
    key!("stage_zero_um", Kind::Float, Fallback::Float(0.0), DELAYS, "stage position of zero delay"),
    key!("normalized", Kind::Bool, Fallback::Bool(true), &[HomDip], "divide by the far-delay level"),
    key!("mean_pairs", Kind::Float, Fallback::Float(0.009), &[SimulateCounts], "mean pairs per pulse"),
    key!("pair_statistics", Kind::Choice(&["poissonian", "thermal"]), Fallback::Text("poissonian"), &[SimulateCounts], "pair-number statistics"),
    key!("pulses_per_point", Kind::Int, Fallback::Int(1_000_000), &[SimulateCounts, ReproducePaper], "pump pulses per delay"),
    key!("repetition_period_ns", Kind::Float, Fallback::Float(12.5), &[SimulateCounts], "pulse spacing"),
    key!("detector_efficiency", Kind::Float, Fallback::Float(0.95), &[SimulateCounts], "efficiency of each detector"),
    key!("dead_time_ns", Kind::Float, Fallback::Float(70.0), &[SimulateCounts], "detector dead time"),
    key!("dark_count_probability", Kind::Float, Fallback::Float(0.0), &[SimulateCounts], "dark-count probability per pulse and detector"),
    key!("input_csv", Kind::Text, Fallback::Absent, &[FitCoupling, FitDip], "measured data; absent means synthesise"),
    key!("port", Kind::Choice(&["a", "b"]), Fallback::Text("a"), &[FitCoupling], "input port label"),
    key!("synthetic_coupling_length_um", Kind::Float, Fallback::Float(114.85), &[FitCoupling], "generator coupling length"),
    key!("synthetic_bend_offset_um", Kind::Float, Fallback::Float(20.0), &[FitCoupling], "generator bend offset"),
    key!("synthetic_amplitude", Kind::Float, Fallback::Float(1.0), &[FitCoupling], "generator amplitude"),
    key!("synthetic_offset", Kind::Float, Fallback::Float(0.0), &[FitCoupling], "generator offset"),
    key!("synthetic_noise", Kind::Float, Fallback::Float(0.01), &[FitCoupling], "generator Gaussian noise on the ratio"),
    key!("synthetic_length_start_um", Kind::Float, Fallback::Float(30.0), &[FitCoupling], "first generated interaction length"),
    key!("synthetic_length_stop_um", Kind::Float, Fallback::Float(580.0), &[FitCoupling], "last generated interaction length"),
    key!("synthetic_points", Kind::Int, Fallback::Int(12), &[FitCoupling], "number of generated lengths"),
    key!("synthetic_visibility", Kind::Float, Fallback::Float(0.935), &[FitDip], "generator dip visibility"),
    key!("synthetic_center_ps", Kind::Float, Fallback::Float(0.0), &[FitDip], "generator dip centre"),
    key!("synthetic_width_ps", Kind::Float, Fallback::Float(1.17), &[FitDip], "generator dip standard width"),
    key!("synthetic_baseline", Kind::Float, Fallback::Float(2000.0), &[FitDip], "generator far-delay counts"),
    key!("synthetic_poisson", Kind::Bool, Fallback::Bool(true), &[FitDip], "draw Poisson counts instead of the noiseless curve"),
    key!("contrast", Kind::Float, Fallback::Absent, &[FpLoss], "measured fringe contrast; absent means synthesise fringes"),
    key!("n_eff", Kind::Float, Fallback::Float(1.9), &[FpLoss], "effective index for the facet reflectivity"),
    key!("length_cm", Kind::Float, Fallback::Float(1.0), &[FpLoss], "waveguide length"),
    key!("alpha_db_per_cm", Kind::Float, Fallback::Float(4.85), &[FpLoss], "generator propagation loss"),
    key!("samples_per_fringe", Kind::Int, Fallback::Int(64), &[FpLoss], "generator phase samples per fringe"),
    key!("fringes", Kind::Int, Fallback::Int(4), &[FpLoss], "generator fringe count"),
    key!("include_mode_solver", Kind::Bool, Fallback::Bool(true), &[ReproducePaper], "run the mode-solver checks"),
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key `{key}` does not apply to scenario {scenario}")]
    NotApplicable { key: String, scenario: Scenario, line: usize },
    #[error("line {line}: key `{key}` expects {expected}")]
    WrongType { key: String, expected: String, line: usize },
    #[error("missing required key `scenario`")]
    MissingScenario,
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

/// Validated parameter table for one scenario, defaults filled in.
#[derive(Debug, Clone)]
pub struct Params {
    pub scenario: Scenario,
    values: BTreeMap<&'static str, Value>,
}

fn lookup(name: &str) -> Option<&'static Key> {
    KEYS.iter().find(|k| k.name == name)
}

fn line_of(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let t = l.trim_start();
            t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

impl Params {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        let scenario = match table.get("scenario") {
            None => return Err(ConfigError::MissingScenario),
            Some(toml::Value::String(s)) => Scenario::parse(s).ok_or_else(|| ConfigError::WrongType {
                key: "scenario".into(),
                expected: Kind::Choice(&[]).label() + &format!("{:?}", Scenario::ALL.map(|s| s.name())),
                line: line_of(text, "scenario"),
            })?,
            Some(_) => {
                return Err(ConfigError::WrongType {
                    key: "scenario".into(),
                    expected: "a string".into(),
                    line: line_of(text, "scenario"),
                })
            }
        };
        let mut values = BTreeMap::new();
        for (name, raw) in &table {
            if name == "scenario" {
                continue;
            }
            let line = line_of(text, name);
            let key = lookup(name).ok_or_else(|| ConfigError::UnknownKey { key: name.clone(), line })?;
            if !key.scenarios.contains(&scenario) {
                return Err(ConfigError::NotApplicable { key: name.clone(), scenario, line });
            }
            let wrong = || ConfigError::WrongType { key: name.clone(), expected: key.kind.label(), line };
            let v = match (key.kind, raw) {
                (Kind::Float, toml::Value::Float(f)) if f.is_finite() => Value::Float(*f),
                (Kind::Float, toml::Value::Integer(i)) => Value::Float(*i as f64),
                (Kind::Int, toml::Value::Integer(i)) => Value::Int(*i),
                (Kind::Bool, toml::Value::Boolean(b)) => Value::Bool(*b),
                (Kind::Text, toml::Value::String(s)) => Value::Text(s.clone()),
                (Kind::Choice(opts), toml::Value::String(s)) if opts.contains(&s.as_str()) => Value::Text(s.clone()),
                _ => return Err(wrong()),
            };
            values.insert(key.name, v);
        }
        for key in KEYS.iter().filter(|k| k.scenarios.contains(&scenario) && k.name != "scenario") {
            if values.contains_key(key.name) {
                continue;
            }
            let v = match key.default {
                Fallback::Float(f) => Value::Float(f),
                Fallback::Int(i) => Value::Int(i),
                Fallback::Bool(b) => Value::Bool(b),
                Fallback::Text(s) => Value::Text(s.into()),
                Fallback::Absent => continue,
            };
            values.insert(key.name, v);
        }
        Ok(Self { scenario, values })
    }

    fn get(&self, name: &str) -> Option<&Value> {
        debug_assert!(lookup(name).is_some_and(|k| k.scenarios.contains(&self.scenario)), "{name}");
        self.values.get(name)
    }

    pub fn float(&self, name: &str) -> f64 {
        self.opt_float(name).unwrap_or_else(|| panic!("no value for {name}"))
    }

    pub fn opt_float(&self, name: &str) -> Option<f64> {
        match self.get(name) {
            Some(Value::Float(f)) => Some(*f),
            _ => None,
        }
    }

    pub fn int(&self, name: &str) -> i64 {
        match self.get(name) {
            Some(Value::Int(i)) => *i,
            _ => panic!("no value for {name}"),
        }
    }

    pub fn flag(&self, name: &str) -> bool {
        matches!(self.get(name), Some(Value::Bool(true)))
    }

    pub fn text(&self, name: &str) -> &str {
        self.opt_text(name).unwrap_or_else(|| panic!("no value for {name}"))
    }

    pub fn opt_text(&self, name: &str) -> Option<&str> {
        match self.get(name) {
            Some(Value::Text(s)) => Some(s),
            _ => None,
        }
    }

    /// Non-negative integer key, rejected at config time otherwise.
    pub fn count(&self, name: &str) -> Result<usize, ConfigError> {
        let v = self.int(name);
        usize::try_from(v).map_err(|_| ConfigError::Invalid(format!("{name} = {v} must be non-negative")))
    }
}

pub fn schema_text() -> String {
    let mut out = String::from("# key | type | default | scenarios | description\n");
    for k in KEYS {
        let default = match k.default {
            Fallback::Float(f) => f.to_string(),
            Fallback::Int(i) => i.to_string(),
            Fallback::Bool(b) => b.to_string(),
            Fallback::Text(s) => format!("\"{s}\""),
            Fallback::Absent => "-".into(),
        };
        let scen = if k.scenarios.len() == Scenario::ALL.len() {
            "all".to_string()
        } else {
            k.scenarios.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")
        };
        out.push_str(&format!("{} | {} | {} | {} | {}\n", k.name, k.kind.label(), default, scen, k.help));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let p = Params::parse("scenario = \"modes\"\ngap_um = 2.3\n").unwrap();
        assert_eq!(p.float("film_thickness_nm"), 600.0);
        assert_eq!(p.opt_float("gap_um"), Some(2.3));
        assert_eq!(p.int("mode_count"), 2);
        assert_eq!(p.text("polarization"), "te");
    }

    #[test]
    fn integers_widen_to_floats() {
        let p = Params::parse("scenario = \"modes\"\netch_depth_nm = 200\n").unwrap();
        assert_eq!(p.float("etch_depth_nm"), 200.0);
    }

    #[test]
    fn rejections_carry_lines() {
        match Params::parse("scenario = \"modes\"\n\nbogus_um = 1\n") {
            Err(ConfigError::UnknownKey { key, line }) => assert_eq!((key.as_str(), line), ("bogus_um", 3)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Params::parse("scenario = \"modes\"\nmean_pairs = 0.1\n"),
            Err(ConfigError::NotApplicable { line: 2, .. })
        ));
        assert!(matches!(
            Params::parse("scenario = \"modes\"\nmode_count = 1.5\n"),
            Err(ConfigError::WrongType { line: 2, .. })
        ));
        assert!(matches!(Params::parse("gap_um = 1.0\n"), Err(ConfigError::MissingScenario)));
        assert!(matches!(Params::parse("scenario = \"nope\"\n"), Err(ConfigError::WrongType { .. })));
        assert!(matches!(Params::parse("scenario = \n"), Err(ConfigError::Syntax(_))));
        assert!(matches!(
            Params::parse("scenario = \"modes\"\npolarization = \"xy\"\n"),
            Err(ConfigError::WrongType { .. })
        ));
    }

    #[test]
    fn every_scenario_has_a_name_key() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::parse(s.name()), Some(s));
            assert!(Params::parse(&format!("scenario = \"{s}\"\n")).is_ok());
        }
        assert!(schema_text().lines().count() > KEYS.len());
    }
}
