//! Sweeps, region maps and artifact formatting shared by the CLI and the browser demo.

use std::collections::BTreeMap;
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::criteria::{self, RegionVerdict, VerdictKind};
use crate::error::{Error, Result};
use crate::params::{BlochSpec, PhysicalParams, Sigma};
use crate::spectrum::{self, classify_default};
use crate::wave::{Wave, WaveKind, DEFAULT_AMPLITUDE_CAP};

pub const TOOL: &str = "bkp";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
const CONFIG_MARK: &str = "bkp-config:";

/// JSON formatter printing every float with 17 significant digits.
pub struct Fixed17<'a>(PrettyFormatter<'a>);

impl Default for Fixed17<'_> {
    fn default() -> Self {
        Fixed17(PrettyFormatter::with_indent(b"  "))
    }
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", fmt_f64(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{}", fmt_f64(value as f64))
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

/// Flat `key = value` configuration mirroring CLI flags.
#[derive(Debug, Clone, Default, PartialEq, Eq, SerializeDerive, Deserialize)]
pub struct Config(pub BTreeMap<String, String>);

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", no + 1)))?;
            let key = k.trim().trim_start_matches("--").replace('_', "-");
            map.insert(key, v.trim().to_string());
        }
        Ok(Config(map))
    }

    /// Pull the embedded config out of an artifact written by this tool.
    pub fn from_artifact(json: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(json)?;
        let cfg = v
            .get("provenance")
            .and_then(|p| p.get("config"))
            .ok_or_else(|| Error::Parse("artifact has no provenance.config".into()))?;
        Ok(serde_json::from_value(cfg.clone())?)
    }

    /// Read a config from a key-value file, a JSON artifact, or a CSV/SVG artifact
    /// carrying `# bkp-config:` lines.
    pub fn load(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return Self::from_artifact(text);
        }
        if text.contains(CONFIG_MARK) {
            let body: String = text
                .lines()
                .filter_map(|l| l.trim().strip_prefix("# ")?.strip_prefix(CONFIG_MARK))
                .map(|l| format!("{}\n", l.trim()))
                .collect();
            return Self::parse(&body);
        }
        Self::parse(text)
    }

    /// Provenance as comment lines, for formats without a metadata slot.
    pub fn embed(&self, command: &str) -> String {
        let mut s = format!("# {TOOL} {VERSION} {command}\n");
        for (k, v) in &self.0 {
            s.push_str(&format!("# {CONFIG_MARK} {k} = {v}\n"));
        }
        s
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }
}

/// Metadata embedded in every artifact.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Config,
    pub amplitude_cap: f64,
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(command: &str, config: Config) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            config,
            amplitude_cap: DEFAULT_AMPLITUDE_CAP,
            notes: vec![format!(
                "amplitude cap {DEFAULT_AMPLITUDE_CAP} is a tool choice; the expansion has no stated radius of validity"
            )],
        }
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, SerializeDerive, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum RegionMode {
    Periodic,
    Bloch { xi: f64 },
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct RegionGrid {
    pub b_range: (f64, f64),
    pub b_steps: usize,
    pub k_sq_range: (f64, f64),
    pub k_sq_steps: usize,
}

impl RegionGrid {
    /// Cell centres along b.
    pub fn b_values(&self) -> Vec<f64> {
        centers(self.b_range, self.b_steps)
    }

    pub fn k_sq_values(&self) -> Vec<f64> {
        centers(self.k_sq_range, self.k_sq_steps)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |r: (f64, f64), n: usize| r.0.is_finite() && r.1.is_finite() && r.0 < r.1 && n > 0;
        if !ok(self.b_range, self.b_steps) || !ok(self.k_sq_range, self.k_sq_steps) {
            return Err(Error::InvalidParameter("region grid needs finite lo < hi and steps > 0".into()));
        }
        if self.k_sq_range.0 < 0.0 {
            return Err(Error::InvalidParameter("k^2 range must be non-negative".into()));
        }
        Ok(())
    }
}

fn centers((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct RegionCell {
    pub b: f64,
    pub k_sq: f64,
    pub verdict: RegionVerdict,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct Verification {
    pub b: f64,
    pub k_sq: f64,
    pub ell_sq: f64,
    pub closed_form: VerdictKind,
    pub numeric: VerdictKind,
    pub max_real: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct RegionMap {
    pub grid: RegionGrid,
    pub mode: RegionMode,
    pub sigma: Sigma,
    pub kappa: f64,
    pub a: f64,
    /// Row-major: b varies fastest.
    pub cells: Vec<RegionCell>,
    pub verified: Vec<Verification>,
}

impl RegionMap {
    pub fn cell(&self, ib: usize, ik: usize) -> &RegionCell {
        &self.cells[ik * self.grid.b_steps + ib]
    }
}

fn cell_params(b: f64, k_sq: f64, kappa: f64, sigma: Sigma) -> Option<PhysicalParams> {
    PhysicalParams::with_k_sq(b, kappa, k_sq, sigma).ok()
}

/// Closed-form verdict for one cell; excluded parameters map to an uncertified cell.
pub fn region_verdict(b: f64, k_sq: f64, kappa: f64, sigma: Sigma, mode: RegionMode, a: f64) -> Result<RegionVerdict> {
    let Some(p) = cell_params(b, k_sq, kappa, sigma) else {
        return Ok(RegionVerdict {
            kind: VerdictKind::Uncertified,
            case_label: "excluded parameters".into(),
            witness: None,
        });
    };
    match mode {
        RegionMode::Periodic => Ok(criteria::classify_periodic(&p, a)),
        RegionMode::Bloch { xi } => criteria::classify_bloch(xi, &p),
    }
}

/// Closed-form map over a `(b, k^2)` grid, with `verify` randomly chosen cells
/// checked against the numerical spectrum.
pub fn region_map(
    grid: &RegionGrid,
    kappa: f64,
    sigma: Sigma,
    mode: RegionMode,
    a: f64,
    verify: usize,
    seed: u64,
) -> Result<RegionMap> {
    grid.validate()?;
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa must be > 0, got {kappa}")));
    }
    let bs = grid.b_values();
    let ks = grid.k_sq_values();
    let mut cells = Vec::with_capacity(bs.len() * ks.len());
    for &k_sq in &ks {
        for &b in &bs {
            cells.push(RegionCell { b, k_sq, verdict: region_verdict(b, k_sq, kappa, sigma, mode, a)? });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut verified = Vec::new();
    let mut attempts = 0;
    while verified.len() < verify && attempts < 50 * verify.max(1) {
        attempts += 1;
        let cell = &cells[rng.random_range(0..cells.len())];
        if cell.verdict.kind == VerdictKind::Uncertified {
            continue;
        }
        let p = cell_params(cell.b, cell.k_sq, kappa, sigma).expect("certified cell has valid params");
        let (spec, ell_sq) = match mode {
            RegionMode::Periodic => {
                let l = 0.5 * criteria::ell_a_sq(&p, a).abs();
                (BlochSpec::from_ell_sq(l, 0.0, crate::params::DEFAULT_MODES)?, l)
            }
            RegionMode::Bloch { xi } => {
                let (_, _, lc) = criteria::ell_thresholds(xi, &p)?;
                (BlochSpec::from_ell_sq(lc, xi, crate::params::DEFAULT_MODES)?, lc)
            }
        };
        let wave = Wave::build(&p, a, WaveKind::Newton, crate::params::DEFAULT_MODES, 1e-12)?;
        let s = spectrum::spectrum(&wave, &spec, &p)?;
        let numeric = classify_default(&s).kind;
        let expected = cell.verdict.kind;
        verified.push(Verification {
            b: cell.b,
            k_sq: cell.k_sq,
            ell_sq,
            closed_form: expected,
            numeric,
            max_real: s.max_real,
            agrees: expected.is_unstable() == numeric.is_unstable(),
        });
    }
    Ok(RegionMap { grid: grid.clone(), mode, sigma, kappa, a, cells, verified })
}

fn verdict_fill(kind: VerdictKind) -> &'static str {
    match kind {
        VerdictKind::StableImaginary => "#7a9cc6",
        VerdictKind::UnstableRealPair => "#ffffff",
        VerdictKind::UnstableComplexPair => "#f3f0e8",
        VerdictKind::Uncertified => "#d62728",
    }
}

/// Minimal static SVG: shaded cells, axes with ticks and the closed-form boundary curves.
pub fn region_svg(map: &RegionMap) -> String {
    let (w, h) = (640.0, 480.0);
    let (ml, mr, mt, mb) = (60.0, 20.0, 30.0, 50.0);
    let pw = w - ml - mr;
    let ph = h - mt - mb;
    let (b0, b1) = map.grid.b_range;
    let (k0, k1) = map.grid.k_sq_range;
    let x = |b: f64| ml + (b - b0) / (b1 - b0) * pw;
    let y = |k: f64| mt + ph - (k - k0) / (k1 - k0) * ph;
    let cw = pw / map.grid.b_steps as f64;
    let ch = ph / map.grid.k_sq_steps as f64;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g shape-rendering=\"crispEdges\">\n");
    for c in &map.cells {
        let kind = c.verdict.kind;
        if kind == VerdictKind::UnstableRealPair {
            continue;
        }
        s.push_str(&format!(
            "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"{}\"/>\n",
            x(c.b) - 0.5 * cw,
            y(c.k_sq) - 0.5 * ch,
            cw + 0.05,
            ch + 0.05,
            verdict_fill(kind)
        ));
    }
    s.push_str("</g>\n");

    // Boundary curves from the closed forms.
    let curves: Vec<Box<dyn Fn(f64) -> Option<f64>>> = match map.mode {
        RegionMode::Periodic => vec![Box::new(|b: f64| {
            (b > 3.5 || b < -1.0).then(|| (b + 1.0) / (2.0 * b - 7.0))
        })],
        RegionMode::Bloch { xi } => vec![
            Box::new(move |b: f64| {
                let q = xi * xi + (1.0 - b) * xi + 1.0;
                (q != 0.0).then(|| -(1.0 + b) / q)
            }),
            Box::new(move |b: f64| {
                let q = xi * xi + (b - 3.0) * xi + (3.0 - b);
                (q != 0.0).then(|| -(1.0 + b) / q)
            }),
        ],
    };
    for f in &curves {
        let mut path = String::new();
        let mut pen_down = false;
        let n = 800;
        for i in 0..=n {
            let b = b0 + (b1 - b0) * i as f64 / n as f64;
            match f(b) {
                Some(k) if k >= k0 && k <= k1 => {
                    path.push_str(&format!("{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, x(b), y(k)));
                    pen_down = true;
                }
                _ => pen_down = false,
            }
        }
        if !path.is_empty() {
            s.push_str(&format!(
                "<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
                path.trim_end()
            ));
        }
    }

    // Axes and ticks.
    s.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    s.push_str("<g font-family=\"sans-serif\" font-size=\"12\">\n");
    for i in 0..=5 {
        let b = b0 + (b1 - b0) * i as f64 / 5.0;
        s.push_str(&format!(
            "<line x1=\"{0:.2}\" y1=\"{1}\" x2=\"{0:.2}\" y2=\"{2}\" stroke=\"black\"/><text x=\"{0:.2}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
            x(b), mt + ph, mt + ph + 5.0, mt + ph + 20.0, trim_num(b)
        ));
        let k = k0 + (k1 - k0) * i as f64 / 5.0;
        s.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1:.2}\" x2=\"{2}\" y2=\"{1:.2}\" stroke=\"black\"/><text x=\"{3}\" y=\"{4:.2}\" text-anchor=\"end\">{5}</text>\n",
            ml - 5.0, y(k), ml, ml - 8.0, y(k) + 4.0, trim_num(k)
        ));
    }
    let title = match map.mode {
        RegionMode::Periodic => format!("periodic, sigma={}", map.sigma),
        RegionMode::Bloch { xi } => format!("bloch xi={}, sigma={}", trim_num(xi), map.sigma),
    };
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">b</text>\n<text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">k^2</text>\n<text x=\"{}\" y=\"18\" text-anchor=\"middle\">{}</text>\n",
        ml + pw / 2.0, h - 10.0, mt + ph / 2.0, mt + ph / 2.0, ml + pw / 2.0, title
    ));
    s.push_str("</g>\n</svg>\n");
    s
}

fn trim_num(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn region_csv(map: &RegionMap) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["b", "k_sq", "kappa", "sigma", "a", "verdict", "case_label", "witness"])
        .map_err(csv_err)?;
    for c in &map.cells {
        w.write_record([
            fmt_f64(c.b),
            fmt_f64(c.k_sq),
            fmt_f64(map.kappa),
            map.sigma.to_string(),
            fmt_f64(map.a),
            c.verdict.kind.to_string(),
            c.verdict.case_label.clone(),
            c.verdict.witness.map(fmt_f64).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, SerializeDerive, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    B,
    Kappa,
    K,
    A,
    Ell,
    Xi,
}

impl std::str::FromStr for AxisName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "b" => AxisName::B,
            "kappa" => AxisName::Kappa,
            "k" => AxisName::K,
            "a" => AxisName::A,
            "ell" => AxisName::Ell,
            "xi" => AxisName::Xi,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "axis must be one of b, kappa, k, a, ell, xi; got {other:?}"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct Axis {
    pub name: AxisName,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Axis {
    /// Parse `name:lo:hi:steps`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return Err(Error::InvalidParameter(format!("axis {s:?} must look like name:lo:hi:steps")));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| Error::InvalidParameter(format!("{t:?}: {e}")));
        let steps = parts[3]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::InvalidParameter(format!("{:?}: {e}", parts[3])))?;
        let axis = Axis { name: parts[0].trim().parse()?, lo: num(parts[1])?, hi: num(parts[2])?, steps };
        if steps == 0 || !(axis.lo <= axis.hi) {
            return Err(Error::InvalidParameter(format!("axis {s:?} needs lo <= hi and steps > 0")));
        }
        Ok(axis)
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        (0..self.steps)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, SerializeDerive, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Spectrum,
    Threshold,
    Band,
    Region,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "spectrum" => Task::Spectrum,
            "threshold" => Task::Threshold,
            "band" => Task::Band,
            "region" => Task::Region,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "task must be spectrum, threshold, band or region; got {other:?}"
                )))
            }
        })
    }
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Threshold => "threshold",
            Task::Band => "band",
            Task::Region => "region",
        }
    }
}

/// Fixed values for parameters that are not swept.
#[derive(Debug, Clone, Copy, PartialEq, SerializeDerive, Deserialize)]
pub struct SweepPoint {
    pub b: f64,
    pub kappa: f64,
    pub k: f64,
    pub sigma: Sigma,
    pub a: f64,
    pub ell: f64,
    pub xi: f64,
}

impl SweepPoint {
    fn with(mut self, name: AxisName, v: f64) -> Self {
        match name {
            AxisName::B => self.b = v,
            AxisName::Kappa => self.kappa = v,
            AxisName::K => self.k = v,
            AxisName::A => self.a = v,
            AxisName::Ell => self.ell = v,
            AxisName::Xi => self.xi = v,
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct SweepConfig {
    pub axes: Vec<Axis>,
    pub fixed: SweepPoint,
    pub tasks: Vec<Task>,
    pub n_modes: usize,
    pub wave: WaveKind,
    pub tol: f64,
    pub seed: u64,
    pub workers: usize,
    /// Measure wall time per row; off by default so outputs stay byte-identical.
    pub timing: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.axes {
            if !seen.insert(a.name) {
                return Err(Error::InvalidParameter(format!("duplicate axis {:?}", a.name)));
            }
        }
        if self.tasks.is_empty() {
            return Err(Error::InvalidParameter("sweep needs at least one task".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let mut pts = vec![self.fixed];
        for axis in &self.axes {
            let vals = axis.values();
            pts = pts
                .into_iter()
                .flat_map(|p| vals.iter().map(move |&v| p.with(axis.name, v)))
                .collect();
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub task: Task,
    pub verdict: VerdictKind,
    pub case_label: String,
    pub witness: Option<f64>,
    pub max_real: Option<f64>,
    pub runtime_ms: f64,
    pub error: Option<String>,
}

fn run_task(cfg: &SweepConfig, pt: &SweepPoint, task: Task) -> Result<(RegionVerdict, Option<f64>)> {
    let p = PhysicalParams::new(pt.b, pt.kappa, pt.k, pt.sigma)?;
    let periodic = pt.xi == 0.0;
    match task {
        Task::Region => {
            let v = if periodic {
                criteria::classify_periodic(&p, pt.a)
            } else {
                let (xi, _) = criteria::fold_xi(pt.xi);
                criteria::classify_bloch(xi, &p)?
            };
            Ok((v, None))
        }
        Task::Spectrum => {
            let wave = Wave::build(&p, pt.a, cfg.wave, cfg.n_modes, cfg.tol)?;
            let s = spectrum::spectrum(&wave, &BlochSpec::new(pt.ell, pt.xi, cfg.n_modes)?, &p)?;
            Ok((classify_default(&s), Some(s.max_real)))
        }
        Task::Threshold => {
            let wave = Wave::build(&p, pt.a, cfg.wave, cfg.n_modes, cfg.tol)?;
            let pred = spectrum::periodic_prediction(&p, pt.a);
            let spec = BlochSpec::new(0.0, 0.0, cfg.n_modes)?;
            let t = spectrum::threshold_bisect(&wave, &p, &spec, spectrum::default_bracket(pred), 1e-10, None, pred)?;
            let v = RegionVerdict {
                kind: VerdictKind::UnstableRealPair,
                case_label: format!("numeric: threshold, prediction {}", fmt_f64(pred)),
                witness: Some(t.ell_star_sq),
            };
            Ok((v, None))
        }
        Task::Band => {
            let (xi, _) = criteria::fold_xi(pt.xi);
            let (l0, lm, lc) = criteria::ell_thresholds(xi, &p)?;
            let wave = Wave::build(&p, pt.a, cfg.wave, cfg.n_modes, cfg.tol)?;
            let spec = BlochSpec::new(0.0, pt.xi, cfg.n_modes)?;
            let b = spectrum::band_scan(&wave, &p, &spec, (l0, lm.max(lc)), 61, None)?;
            let v = RegionVerdict {
                kind: VerdictKind::UnstableComplexPair,
                case_label: format!("numeric: band [{}, {}]", fmt_f64(b.lower), fmt_f64(b.upper)),
                witness: Some(b.half_width),
            };
            Ok((v, Some(b.peak_eigenvalue.re)))
        }
    }
}

/// Run every task at every grid point. Rows come back in grid order regardless of scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let jobs: Vec<(SweepPoint, Task)> = cfg
        .points()
        .into_iter()
        .flat_map(|p| cfg.tasks.iter().map(move |&t| (p, t)))
        .collect();
    let one = |(pt, task): &(SweepPoint, Task)| -> SweepRow {
        let start = std::time::Instant::now();
        let out = run_task(cfg, pt, *task);
        let runtime_ms = if cfg.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        match out {
            Ok((v, max_real)) => SweepRow {
                point: *pt,
                task: *task,
                verdict: v.kind,
                case_label: v.case_label,
                witness: v.witness,
                max_real: max_real.or(if *task == Task::Spectrum { v.witness } else { None }),
                runtime_ms,
                error: None,
            },
            Err(e) => SweepRow {
                point: *pt,
                task: *task,
                verdict: VerdictKind::Uncertified,
                case_label: "error".into(),
                witness: None,
                max_real: None,
                runtime_ms,
                error: Some(e.to_string()),
            },
        }
    };
    Ok(par_map_jobs(&jobs, cfg.workers, one))
}

#[cfg(feature = "parallel")]
fn par_map_jobs<J: Sync, T: Send>(jobs: &[J], workers: usize, f: impl Fn(&J) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build();
    match pool {
        Ok(pool) => pool.install(|| jobs.par_iter().map(&f).collect()),
        Err(_) => jobs.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn par_map_jobs<J, T>(jobs: &[J], _workers: usize, f: impl Fn(&J) -> T) -> Vec<T> {
    jobs.iter().map(f).collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "b", "kappa", "k", "sigma", "a", "ell", "xi", "task", "verdict", "case_label", "witness", "max_real",
        "runtime_ms",
    ])
    .map_err(csv_err)?;
    for r in rows {
        let p = &r.point;
        let label = match &r.error {
            Some(e) => format!("error: {e}"),
            None => r.case_label.clone(),
        };
        w.write_record([
            fmt_f64(p.b),
            fmt_f64(p.kappa),
            fmt_f64(p.k),
            p.sigma.to_string(),
            fmt_f64(p.a),
            fmt_f64(p.ell),
            fmt_f64(p.xi),
            r.task.as_str().to_string(),
            r.verdict.to_string(),
            label,
            r.witness.map(fmt_f64).unwrap_or_default(),
            r.max_real.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.runtime_ms),
        ])
        .map_err(csv_err)?;
    }
    finish_csv(w)
}
