use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use conewave_core::grid::GridSpec;
use conewave_core::multipliers::CutoffProfile;
use conewave_core::solver::{Dealias, Derivative, IterationConfig, Schematic, System};
use conewave_core::spaces::SchematicParams;
use conewave_core::verify::{AmplitudeLaw, Lemma, LocalStrichartzMode, ProductKind};

/// Estimate ids accepted in `verify.estimates`.
pub const ESTIMATE_IDS: &[&str] = &[
    "support",
    "strichartz",
    "local-strichartz",
    "angular-reconstruction",
    "y-l2",
    "y-in-z",
    "energy",
    "product",
    "f-proxy",
];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: GridBlock,
    pub profile: CutoffProfile,
    pub schematic: SchematicBlock,
    pub data: DataBlock,
    pub solver: SolverBlock,
    pub verify: VerifyBlock,
    pub output: OutputBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridBlock {
    pub n: usize,
    pub nx: usize,
    pub length: f64,
    pub nt: usize,
    pub period: f64,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock { n: 2, nx: 16, length: 1.0, nt: 16, period: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchematicBlock {
    pub system: System,
    pub derivative: Derivative,
    /// Optional restatement of the scaling exponents; must match the system.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    /// Exponents used by `norms` and `verify`; must equal `n/2 - sigma` unless `sc_override`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sc: Option<Vec<f64>>,
    pub sc_override: bool,
}

impl Default for SchematicBlock {
    fn default() -> Self {
        let s = Schematic::default();
        SchematicBlock { system: s.system, derivative: s.derivative, sigma: None, sc: None, sc_override: false }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    #[default]
    Random,
    Zero,
    Files,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataBlock {
    pub source: DataSource,
    pub law: AmplitudeLaw,
    /// Space-time fields: populate the shell `lambda` (all frequencies when absent).
    /// Cauchy data: populate `lambda <= |xi| < 2 lambda`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Space-time field container read by `decompose` and `norms`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
    /// Per-component spatial containers read by `solve` and `scatter`.
    pub f: Vec<PathBuf>,
    pub g: Vec<PathBuf>,
}

impl Default for DataBlock {
    fn default() -> Self {
        DataBlock { source: DataSource::Random, law: AmplitudeLaw::default(), lambda: None, field: None, f: vec![], g: vec![] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    pub epsilon0: f64,
    pub max_iter: usize,
    pub contraction_tol: f64,
    pub dealias: Dealias,
    pub two_sided: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_cutoff: Option<f64>,
    pub angular: bool,
    pub linear: bool,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let d = IterationConfig::default();
        SolverBlock {
            epsilon0: d.epsilon0,
            max_iter: d.max_iter,
            contraction_tol: d.contraction_tol,
            dealias: d.dealias,
            two_sided: d.two_sided,
            source_cutoff: d.source_cutoff,
            angular: d.angular,
            linear: d.linear,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportMode {
    #[default]
    Exhaustive,
    Sampled,
}

/// Lebesgue exponent written as a number or `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponent(pub f64);

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Exponent;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                match v {
                    "inf" | "infinity" => Ok(Exponent(f64::INFINITY)),
                    _ => Err(E::custom(format!("unknown exponent '{v}'"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyBlock {
    pub estimates: Vec<String>,
    /// Near-cone constant `c`.
    pub c: f64,
    pub ensemble: usize,
    pub law: AmplitudeLaw,
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    pub ds: Vec<f64>,
    pub lemmas: Vec<Lemma>,
    pub mode: SupportMode,
    pub pairs: u64,
    pub exponents: Vec<[Exponent; 2]>,
    pub local_mode: LocalStrichartzMode,
    pub products: Vec<ProductKind>,
    /// Sector width for the angular reconstruction check.
    pub delta: f64,
    pub oracle_iterations: usize,
    pub oracle_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub golden: Option<PathBuf>,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        VerifyBlock {
            estimates: vec!["support".into()],
            c: SchematicParams::default().c,
            ensemble: 16,
            law: AmplitudeLaw::default(),
            lambdas: vec![64.0],
            mus: vec![8.0],
            ds: vec![0.5],
            lemmas: vec![Lemma::Wide],
            mode: SupportMode::Exhaustive,
            pairs: 200_000,
            exponents: vec![[Exponent(f64::INFINITY), Exponent(2.0)]],
            local_mode: LocalStrichartzMode::default(),
            products: vec![ProductKind::HlA],
            delta: 2.0,
            oracle_iterations: 200_000,
            oracle_gap: 1e-9,
            golden: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: PathBuf::from("out"), formats: vec![Format::Json, Format::Csv] }
    }
}

impl OutputBlock {
    pub fn json(&self) -> bool {
        self.formats.contains(&Format::Json)
    }

    pub fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let g = &self.grid;
        GridSpec::new(g.n, g.nx, g.length, g.nt, g.period).context("grid")
    }

    pub fn schematic(&self) -> Schematic {
        Schematic { system: self.schematic.system, derivative: self.schematic.derivative }
    }

    pub fn params(&self) -> SchematicParams {
        SchematicParams { c: self.verify.c }
    }

    /// Exponents used by `norms` and `verify`.
    pub fn critical_exponents(&self) -> Vec<f64> {
        self.schematic.sc.clone().unwrap_or_else(|| self.schematic().critical_exponents(self.grid.n))
    }

    pub fn iteration(&self) -> IterationConfig {
        let s = &self.solver;
        IterationConfig {
            params: self.params(),
            schematic: self.schematic(),
            epsilon0: s.epsilon0,
            max_iter: s.max_iter,
            contraction_tol: s.contraction_tol,
            dealias: s.dealias,
            two_sided: s.two_sided,
            source_cutoff: s.source_cutoff,
            angular: s.angular,
            linear: s.linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.profile.validate().context("profile")?;
        let schem = self.schematic();
        schem.validate(self.grid.n).context("schematic.derivative")?;
        let sigma = schem.sigma();
        if let Some(given) = &self.schematic.sigma {
            if *given != sigma {
                bail!("schematic.sigma: {given:?} does not match {:?} for {:?}", sigma, schem.system);
            }
        }
        if let Some(sc) = &self.schematic.sc {
            let want = schem.critical_exponents(self.grid.n);
            if sc.len() != want.len() {
                bail!("schematic.sc: expected {} entries, found {}", want.len(), sc.len());
            }
            if *sc != want && !self.schematic.sc_override {
                bail!("schematic.sc: {sc:?} differs from n/2 - sigma = {want:?}; set sc_override = true to keep it");
            }
        }
        self.iteration().validate(&self.grid()?).context("solver")?;
        let v = &self.verify;
        if !(v.c > 0.0 && v.c < 1.0) {
            bail!("verify.c: {} must lie in (0, 1)", v.c);
        }
        for (k, id) in v.estimates.iter().enumerate() {
            if !ESTIMATE_IDS.contains(&id.as_str()) {
                bail!("verify.estimates[{k}]: unknown estimate id '{id}' (known: {})", ESTIMATE_IDS.join(", "));
            }
        }
        if v.ensemble < 8 {
            bail!("verify.ensemble: {} is below 8", v.ensemble);
        }
        for (name, list) in [("lambdas", &v.lambdas), ("mus", &v.mus), ("ds", &v.ds)] {
            if list.is_empty() {
                bail!("verify.{name}: list is empty");
            }
            if let Some(k) = list.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
                bail!("verify.{name}[{k}]: {} must be positive", list[k]);
            }
        }
        if self.data.source == DataSource::Files && self.data.f.len() != self.data.g.len() {
            bail!("data.g: {} paths for {} in data.f", self.data.g.len(), self.data.f.len());
        }
        if self.output.formats.is_empty() {
            bail!("output.formats: list is empty");
        }
        Ok(())
    }
}
