//! Run configuration, checkpoints and report bundles.
//!
//! Configurations are JSON with unknown fields rejected. Reports are a
//! `metadata.json`, an optional `verdicts.json` and one CSV per table; every
//! CSV row ends with a `provenance` column (`measured`, `fitted` or `bound`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{DecayFit, EnergyReport, EstimateReport, FitKind, GronwallReport, ResidualReport};
use crate::error::{config, Error, Result};
use crate::exponents::ExponentConfig;
use crate::mild::{GlobalConfig, GlobalRun, LemmaConstants, Model, PicardConfig, PicardReport, TrajectoryState};
use crate::nonlinear::{CouplingParams, ForcingSpec, Rhs};
use crate::spectral::random::{random_low_mode, rng};
use crate::spectral::{GridSpec, SpectralField};

// ---------------------------------------------------------------------------
// Configuration

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Forcings {
    #[serde(default)]
    pub f: ForcingSpec,
    #[serde(default)]
    pub g: ForcingSpec,
}

/// Seeded random initial data restricted to `|k_i| ≤ kmax`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    /// `L²` norm of each of `u₀`, `ω₀`, `θ₀`.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_kmax")]
    pub kmax: i64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_amplitude() -> f64 {
    0.1
}
fn default_kmax() -> i64 {
    3
}
fn default_sigma() -> f64 {
    2.0
}
fn default_ensemble() -> usize {
    100
}
fn default_alpha() -> f64 {
    0.5
}
fn default_lambda_fraction() -> f64 {
    0.5
}
fn default_p() -> f64 {
    2.0
}
fn default_k() -> u32 {
    1
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData {
            amplitude: default_amplitude(),
            kmax: default_kmax(),
            sigma: default_sigma(),
        }
    }
}

/// Parameters of the `verify` command that are not part of the exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySettings {
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Smoothing and embedding exponent.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Decay rate as a fraction of the first eigenvalue.
    #[serde(default = "default_lambda_fraction")]
    pub lambda_fraction: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Derivative order and Lebesgue exponent of the embedding target.
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default = "default_p")]
    pub s: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            ensemble: default_ensemble(),
            sigma: default_sigma(),
            alpha: default_alpha(),
            lambda_fraction: default_lambda_fraction(),
            p: default_p(),
            k: default_k(),
            s: default_p(),
        }
    }
}

/// Everything a run needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub exponents: ExponentConfig,
    /// Complete missing intermediates with the automatic selection.
    #[serde(default)]
    pub select_exponents: bool,
    #[serde(default)]
    pub params: CouplingParams,
    #[serde(default)]
    pub forcings: Forcings,
    pub picard: PicardConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global: Option<GlobalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<LemmaConstants>,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub verify: VerifySettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// 2D `16²` grid, the `p = q = r = 2`, `α₀ = β₀ = 1/2`, `γ₀ = 0` exponents and a short horizon.
    pub fn example() -> Self {
        RunConfig {
            grid: GridSpec::new(2, 16).expect("valid grid"),
            exponents: ExponentConfig::base(2.0, 2.0, 2.0, 0.5, 0.5, 0.0),
            select_exponents: true,
            params: CouplingParams::default(),
            forcings: Forcings::default(),
            picard: PicardConfig::new(0.2, 50),
            global: None,
            constants: None,
            initial: InitialData::default(),
            verify: VerifySettings::default(),
            seed: 0,
            output_dir: default_output(),
        }
    }

    /// Parses JSON; errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Field-level validation; exponent admissibility is checked by the caller.
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.exponents
            .validate_fields()
            .map_err(|e| config(format!("exponents: {}", strip(&e))))?;
        self.model().validate()?;
        self.picard.validate()?;
        if let Some(g) = &self.global {
            g.validate()?;
        }
        if let Some(c) = &self.constants {
            c.validate()?;
        }
        let i = &self.initial;
        if !(i.amplitude >= 0.0 && i.amplitude.is_finite()) {
            return Err(config(format!("initial.amplitude must be nonnegative, got {}", i.amplitude)));
        }
        if i.kmax < 1 {
            return Err(config(format!("initial.kmax must be at least 1, got {}", i.kmax)));
        }
        let v = &self.verify;
        if v.ensemble == 0 {
            return Err(config("verify.ensemble must be at least 1"));
        }
        if !(v.lambda_fraction >= 0.0 && v.lambda_fraction < 1.0) {
            return Err(config(format!("verify.lambda_fraction must lie in [0,1), got {}", v.lambda_fraction)));
        }
        Ok(())
    }

    pub fn model(&self) -> Model {
        Model::new(self.params, self.forcings.f, self.forcings.g)
    }

    /// `(u₀, ω₀, θ₀)` drawn from `seed`.
    pub fn initial_data(&self) -> (SpectralField, SpectralField, SpectralField) {
        let i = &self.initial;
        let mut r = rng(self.seed);
        (
            random_low_mode(self.grid, 3, i.kmax, i.sigma, i.amplitude, &mut r),
            random_low_mode(self.grid, 3, i.kmax, i.sigma, i.amplitude, &mut r),
            random_low_mode(self.grid, 1, i.kmax, i.sigma, i.amplitude, &mut r),
        )
    }

    /// SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(serde_json::to_vec(self).expect("serializable")))
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Config(m) | Error::Domain(m) => m.clone(),
        other => other.to_string(),
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// Checkpoints

pub const CHECKPOINT_FORMAT: &str = "micropolar-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// First line of a checkpoint file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub grid: GridSpec,
    pub nodes: usize,
    pub iteration: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub payload_bytes: usize,
    pub sha256: String,
}

/// Fields stored per node, in order.
const PER_NODE: [usize; 6] = [3, 3, 1, 3, 3, 1];

fn push_field(buf: &mut Vec<u8>, f: &SpectralField) {
    for c in f.coeffs() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
}

fn node_fields(traj: &TrajectoryState, j: usize) -> [&SpectralField; 6] {
    let r = &traj.rhs[j];
    [&traj.u[j], &traj.omega[j], &traj.theta[j], &r.f, &r.g, &r.h]
}

/// Writes `traj` as a JSON header line followed by little-endian `f64` data:
/// times, then per node the coefficients of `u, ω, θ, F, G, H`, then one mean-zero flag per field.
pub fn checkpoint_write(traj: &TrajectoryState, config_hash: &str, path: &Path) -> Result<()> {
    let mut payload = Vec::new();
    for t in &traj.times {
        payload.extend_from_slice(&t.to_le_bytes());
    }
    for j in 0..traj.nodes() {
        for f in node_fields(traj, j) {
            push_field(&mut payload, f);
        }
    }
    for j in 0..traj.nodes() {
        for f in node_fields(traj, j) {
            payload.extend_from_slice(&(if f.mean_zero() { 1.0f64 } else { 0.0 }).to_le_bytes());
        }
    }
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        config_hash: config_hash.into(),
        grid: traj.grid(),
        nodes: traj.nodes(),
        iteration: traj.m,
        t_start: traj.times[0],
        t_end: traj.t_final(),
        payload_bytes: payload.len(),
        sha256: hex(&Sha256::digest(&payload)),
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    out.extend_from_slice(&payload);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, out)?;
    Ok(())
}

fn integrity(msg: impl std::fmt::Display) -> Error {
    Error::Integrity(msg.to_string())
}

/// Reads and validates the header line only.
pub fn checkpoint_header(path: &Path) -> Result<CheckpointHeader> {
    let bytes = fs::read(path)?;
    Ok(split_checkpoint(&bytes)?.0)
}

fn split_checkpoint(bytes: &[u8]) -> Result<(CheckpointHeader, &[u8])> {
    let nl = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| integrity("checkpoint has no header line"))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| integrity(format!("unreadable checkpoint header: {e}")))?;
    if header.format != CHECKPOINT_FORMAT {
        return Err(integrity(format!("not a checkpoint: format {:?}", header.format)));
    }
    if header.version != CHECKPOINT_VERSION {
        return Err(integrity(format!(
            "checkpoint format version {} is not supported (expected {CHECKPOINT_VERSION})",
            header.version
        )));
    }
    Ok((header, &bytes[nl + 1..]))
}

/// Reads a checkpoint, verifying length and checksum; nothing is returned on failure.
pub fn checkpoint_read(path: &Path) -> Result<(CheckpointHeader, TrajectoryState)> {
    let bytes = fs::read(path)?;
    let (header, payload) = split_checkpoint(&bytes)?;
    if payload.len() != header.payload_bytes {
        return Err(integrity(format!(
            "checkpoint payload has {} bytes, header declares {}",
            payload.len(),
            header.payload_bytes
        )));
    }
    if hex(&Sha256::digest(payload)) != header.sha256 {
        return Err(integrity("checkpoint checksum mismatch"));
    }
    header.grid.validate()?;
    let n = header.nodes;
    let npts = header.grid.points();
    let per_node: usize = PER_NODE.iter().sum::<usize>() * npts * 16;
    let expected = n * 8 + n * per_node + n * PER_NODE.len() * 8;
    if n == 0 || payload.len() != expected {
        return Err(integrity(format!(
            "checkpoint payload size {} does not match {n} nodes on the declared grid ({expected})",
            payload.len()
        )));
    }
    let mut pos = 0;
    let mut next = || {
        let v = f64::from_le_bytes(payload[pos..pos + 8].try_into().expect("8 bytes"));
        pos += 8;
        v
    };
    let times: Vec<f64> = (0..n).map(|_| next()).collect();
    let mut fields: Vec<[SpectralField; 6]> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut node = Vec::with_capacity(6);
        for comps in PER_NODE {
            let coeffs: Vec<Complex64> = (0..comps * npts)
                .map(|_| {
                    let re = next();
                    Complex64::new(re, next())
                })
                .collect();
            node.push(SpectralField::from_coeffs(header.grid, comps, coeffs)?);
        }
        fields.push(node.try_into().expect("six fields"));
    }
    for node in fields.iter_mut() {
        for f in node.iter_mut() {
            f.set_mean_zero_flag(next() == 1.0);
        }
    }
    let mut traj = TrajectoryState {
        times,
        u: Vec::with_capacity(n),
        omega: Vec::with_capacity(n),
        theta: Vec::with_capacity(n),
        rhs: Vec::with_capacity(n),
        m: header.iteration,
    };
    for [u, w, th, f, g, h] in fields {
        traj.u.push(u);
        traj.omega.push(w);
        traj.theta.push(th);
        traj.rhs.push(Rhs { f, g, h });
    }
    Ok((header, traj))
}

/// [`checkpoint_read`] that also refuses a checkpoint written under another configuration.
pub fn checkpoint_read_for(path: &Path, config_hash: &str) -> Result<TrajectoryState> {
    let (header, traj) = checkpoint_read(path)?;
    if header.config_hash != config_hash {
        return Err(config(format!(
            "checkpoint was written for configuration {} but the current configuration hashes to {config_hash}",
            header.config_hash
        )));
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Measured,
    Fitted,
    Bound,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Measured => "measured",
            Provenance::Fitted => "fitted",
            Provenance::Bound => "bound",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "measured" => Some(Provenance::Measured),
            "fitted" => Some(Provenance::Fitted),
            "bound" => Some(Provenance::Bound),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Empty,
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format!("{x:e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn parse(s: &str) -> Self {
        if s.is_empty() {
            Cell::Empty
        } else if let Ok(i) = s.parse::<i64>() {
            Cell::Int(i)
        } else if let Ok(x) = s.parse::<f64>() {
            Cell::Num(x)
        } else {
            Cell::Text(s.to_string())
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A CSV table; the `provenance` column is appended on output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<(Vec<Cell>, Provenance)>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<Cell>, provenance: Provenance) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push((cells, provenance));
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.columns.clone();
        header.push("provenance".into());
        w.write_record(&header)?;
        for (cells, prov) in &self.rows {
            let mut rec: Vec<String> = cells.iter().map(Cell::render).collect();
            rec.push(prov.as_str().into());
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn from_csv(name: &str, bytes: &[u8]) -> Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        let mut columns: Vec<String> = r.headers()?.iter().map(String::from).collect();
        if columns.pop().as_deref() != Some("provenance") {
            return Err(config(format!("table {name}: last column must be provenance")));
        }
        let mut t = Table {
            name: name.into(),
            columns,
            rows: Vec::new(),
        };
        for rec in r.records() {
            let rec = rec?;
            let n = rec.len();
            let prov = Provenance::parse(&rec[n - 1])
                .ok_or_else(|| config(format!("table {name}: unknown provenance {:?}", &rec[n - 1])))?;
            t.rows.push((rec.iter().take(n - 1).map(Cell::parse).collect(), prov));
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub command: String,
    pub crate_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Everything one command writes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub metadata: Metadata,
    pub tables: Vec<Table>,
    pub verdicts: BTreeMap<String, serde_json::Value>,
}

impl ReportBundle {
    pub fn new(command: &str) -> Self {
        let now = unix_now();
        ReportBundle {
            metadata: Metadata {
                command: command.into(),
                crate_version: env!("CARGO_PKG_VERSION").into(),
                config_hash: None,
                seed: None,
                started_unix: now,
                finished_unix: now,
            },
            tables: Vec::new(),
            verdicts: BTreeMap::new(),
        }
    }

    pub fn with_config(mut self, cfg: &RunConfig) -> Self {
        self.metadata.config_hash = Some(cfg.hash());
        self.metadata.seed = Some(cfg.seed);
        self
    }

    pub fn verdict<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        self.verdicts.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn finish(&mut self) {
        self.metadata.finished_unix = unix_now();
    }

    /// File names and contents, in write order.
    pub fn files(&self) -> Result<Vec<(String, Vec<u8>)>> {
        let mut out = vec![("metadata.json".to_string(), pretty(&self.metadata)?)];
        if !self.verdicts.is_empty() {
            out.push(("verdicts.json".to_string(), pretty(&self.verdicts)?));
        }
        for t in &self.tables {
            if t.name.is_empty() || !t.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(config(format!("invalid table name {:?}", t.name)));
            }
            out.push((format!("{}.csv", t.name), t.to_csv()?));
        }
        Ok(out)
    }

    /// Reads a bundle written by [`write_report`].
    pub fn read(dir: &Path) -> Result<Self> {
        let metadata: Metadata = serde_json::from_slice(&fs::read(dir.join("metadata.json"))?)?;
        let vpath = dir.join("verdicts.json");
        let verdicts = if vpath.exists() {
            serde_json::from_slice(&fs::read(vpath)?)?
        } else {
            BTreeMap::new()
        };
        let mut names: Vec<String> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter_map(|n| n.strip_suffix(".csv").map(String::from))
            .collect();
        names.sort();
        let tables = names
            .iter()
            .map(|n| Table::from_csv(n, &fs::read(dir.join(format!("{n}.csv")))?))
            .collect::<Result<Vec<_>>>()?;
        Ok(ReportBundle {
            metadata,
            tables,
            verdicts,
        })
    }
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

/// Writes every file of `bundle` into `dir` and returns their paths.
pub fn write_report(bundle: &ReportBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, bytes) in bundle.files()? {
        let p = dir.join(name);
        fs::write(&p, bytes)?;
        paths.push(p);
    }
    Ok(paths)
}

// ---------------------------------------------------------------------------
// Standard tables

/// `ensemble, member, ratio`.
pub fn estimate_table(name: &str, rep: &EstimateReport) -> Table {
    let mut t = Table::new(name, &["ensemble", "member", "ratio"]);
    let n = rep.ensemble_size.max(1);
    for (i, r) in rep.ratios.iter().enumerate() {
        t.push(vec![(i / n).into(), (i % n).into(), (*r).into()], Provenance::Measured);
    }
    t
}

/// `t, norm_tag, value, fitted_slope, residual`: one measured row per sample and
/// one fitted row per fit (at the window end, `value` empty).
pub fn decay_table(fits: &[DecayFit]) -> Table {
    let mut t = Table::new("decay_fit", &["t", "norm_tag", "value", "fitted_slope", "residual"]);
    for f in fits {
        let tag = match f.kind {
            FitKind::LogLog => format!("{}@loglog", f.norm_tag),
            FitKind::Semilog => format!("{}@semilog", f.norm_tag),
        };
        for &(s, v) in &f.samples {
            t.push(vec![s.into(), tag.clone().into(), v.into(), Cell::Empty, Cell::Empty], Provenance::Measured);
        }
        t.push(
            vec![f.window.1.into(), tag.into(), Cell::Empty, f.fitted_slope.into(), f.residual.into()],
            Provenance::Fitted,
        );
    }
    t
}

/// `m, norm_tag, difference, ratio`.
pub fn picard_table(name: &str, rep: &PicardReport) -> Table {
    let mut t = Table::new(name, &["m", "norm_tag", "difference", "ratio"]);
    for it in &rep.iterations {
        let ratio = |r: Option<f64>| r.map(Cell::Num).unwrap_or(Cell::Empty);
        t.push(
            vec![it.m.into(), "max".into(), it.difference.into(), ratio(it.ratio)],
            Provenance::Measured,
        );
        for (k, tag) in rep.norm_tags.iter().enumerate() {
            t.push(
                vec![
                    it.m.into(),
                    tag.as_str().into(),
                    it.per_norm.get(k).copied().unwrap_or(f64::NAN).into(),
                    ratio(it.per_norm_ratio.get(k).copied().flatten()),
                ],
                Provenance::Measured,
            );
        }
    }
    t
}

/// `t, norm_tag, value`: the E-functions, and the bound `2C D₀` per node.
pub fn elog_table(run: &GlobalRun, bound_constant: f64) -> Table {
    let mut t = Table::new("elog", &["t", "norm_tag", "value"]);
    for s in &run.elog {
        for (tag, v) in run.norm_tags.iter().zip(&s.values) {
            t.push(vec![s.t.into(), tag.as_str().into(), (*v).into()], Provenance::Measured);
        }
        t.push(
            vec![s.t.into(), "2CD0".into(), (2.0 * bound_constant * run.d0).into()],
            Provenance::Bound,
        );
    }
    t
}

/// `t, series, value` with the bound and the oracle.
pub fn gronwall_table(rep: &GronwallReport) -> Table {
    let mut t = Table::new("gronwall", &["t", "series", "value"]);
    for (i, &s) in rep.bound.times.iter().enumerate() {
        t.push(vec![s.into(), "bound".into(), rep.bound.values[i].into()], Provenance::Bound);
        t.push(vec![s.into(), "oracle".into(), rep.oracle.values[i].into()], Provenance::Measured);
    }
    t
}

/// `t, quantity, value`.
pub fn energy_table(rep: &EnergyReport) -> Table {
    let mut t = Table::new("energy", &["t", "quantity", "value"]);
    for (j, &s) in rep.times.iter().enumerate() {
        for (q, v) in [
            ("total", rep.total[j]),
            ("kinetic", rep.kinetic[j]),
            ("dissipation", rep.dissipation[j]),
            ("forcing_work", rep.forcing_work[j]),
        ] {
            t.push(vec![s.into(), q.into(), v.into()], Provenance::Measured);
        }
        if j >= 1 && j + 1 < rep.times.len() {
            t.push(
                vec![s.into(), "identity_residual".into(), rep.identity_residual[j - 1].into()],
                Provenance::Measured,
            );
        }
    }
    t
}

/// `t, field, residual`.
pub fn residual_table(rep: &ResidualReport) -> Table {
    let mut t = Table::new("residual", &["t", "field", "residual"]);
    for (j, &s) in rep.times.iter().enumerate() {
        for (f, v) in [("u", rep.u[j]), ("omega", rep.omega[j]), ("theta", rep.theta[j])] {
            t.push(vec![s.into(), f.into(), v.into()], Provenance::Measured);
        }
    }
    t
}

/// `t, field, l2_norm` of every node.
pub fn trajectory_table(traj: &TrajectoryState) -> Table {
    let mut t = Table::new("trajectory", &["t", "field", "l2_norm"]);
    for j in 0..traj.nodes() {
        let (u, w, th) = traj.state(j);
        for (f, v) in [("u", u.l2_norm()), ("omega", w.l2_norm()), ("theta", th.l2_norm())] {
            t.push(vec![traj.times[j].into(), f.into(), v.into()], Provenance::Measured);
        }
    }
    t
}
