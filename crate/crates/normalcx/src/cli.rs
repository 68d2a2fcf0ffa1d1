//! Command-line front end. Every subcommand prints one JSON report to
//! stdout; diagnostics and timings go to stderr, so reports are
//! byte-for-byte reproducible for fixed inputs and seed. All exact numbers
//! appear as rational strings; floating-point values occur only in the
//! explicitly labeled Monte Carlo fields.
//!
//! Exit codes: 0 when the command succeeds (and any requested check
//! passes), 1 when a validation or verification check fails, 2 when an
//! input cannot be read or parsed.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::arith::{Rat, RatMatrix};
use crate::chow::{
    verify_volume_identity, volume_polynomial_eval, volume_polynomial_symbolic, ChowError,
};
use crate::fan::{
    check_balancing, fan_from_json, fan_to_json, Cone, Fan, FanError, WeightFunction,
};
use crate::matroid::{building_set_from_json, construct_cubical_z, Matroid, MatroidError};
use crate::normal::{
    complex_volume, is_cubical, volume_oracle_montecarlo, volume_oracle_triangulation,
    Cubicality, InnerProduct, NormalError, ZValue,
};
use crate::rng::SplitMix64;

const EXIT_OK: i32 = 0;
const EXIT_FAIL: i32 = 1;
const EXIT_INPUT: i32 = 2;

/// How many fresh random matrices `verify` tries per trial before giving
/// up, and how many diagonal doublings it tries per matrix.
const RESAMPLE_CAP: u32 = 25;
const SHIFT_CAP: u32 = 40;

/// A problem with the command's inputs (unreadable file, malformed JSON,
/// inconsistent dimensions). Maps to exit code 2.
#[derive(Debug)]
pub struct InputError(String);

impl InputError {
    fn new(message: impl Into<String>) -> Self {
        InputError(message.into())
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Parser)]
#[command(
    name = "normalcx",
    version,
    about = "Exact volumes of normal complexes of tropical fans, their volume polynomials, and Bergman-fan constructions"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a fan file for structural violations and report balancing.
    FanValidate {
        /// Fan file (JSON).
        fan: PathBuf,
    },
    /// Classify truncation values: cubical, pseudo-cubical, or neither.
    Cubical {
        /// Fan file (JSON).
        fan: PathBuf,
        /// Truncation values (JSON map from ray id to rational string).
        z: PathBuf,
        /// Inner product file; defaults to the standard dot product.
        #[arg(long)]
        inner_product: Option<PathBuf>,
    },
    /// Exact volume of the normal complex, optionally cross-checked.
    Volume {
        /// Fan file (JSON); weights default to one per maximal cone.
        fan: PathBuf,
        /// Truncation values (JSON map from ray id to rational string).
        z: PathBuf,
        /// Inner product file; defaults to the standard dot product.
        #[arg(long)]
        inner_product: Option<PathBuf>,
        /// Independent cross-check to run alongside the exact value.
        #[arg(long, value_enum, default_value_t = Oracle::None)]
        oracle: Oracle,
        /// Seed for the Monte Carlo oracle.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample count per maximal cone for the Monte Carlo oracle.
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Volume polynomial of a balanced weighted fan.
    Volpoly {
        /// Fan file (JSON) with weights.
        fan: PathBuf,
        /// Inner product file; defaults to the standard dot product.
        #[arg(long)]
        inner_product: Option<PathBuf>,
        /// Print the polynomial itself.
        #[arg(long)]
        symbolic: bool,
        /// Evaluate the polynomial at these truncation values.
        #[arg(long)]
        z: Option<PathBuf>,
    },
    /// Bergman fan of a matroid plus a certified cubical truncation vector.
    Bergman {
        /// Matroid file: {"ground", "flats"} or {"graph": {...}}.
        matroid: PathBuf,
        /// "max" for all nonempty flats, or a JSON file listing flats.
        #[arg(long, default_value = "max")]
        building_set: String,
        /// Write the fan (unit weights) to this file.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write the certified truncation values to this file.
        #[arg(long)]
        z_output: Option<PathBuf>,
    },
    /// Check the volume identity across random positive-definite inner
    /// products.
    Verify {
        /// Fan file; requires --z.
        #[arg(long, conflicts_with = "matroid", requires = "z")]
        fan: Option<PathBuf>,
        /// Matroid file; the truncation vector is constructed on the spot.
        #[arg(long, required_unless_present = "fan")]
        matroid: Option<PathBuf>,
        /// Truncation values for --fan mode.
        #[arg(long)]
        z: Option<PathBuf>,
        /// Building set for --matroid mode: "max" or a JSON file.
        #[arg(long, default_value = "max")]
        building_set: String,
        /// Number of random inner products to test.
        #[arg(long, default_value_t = 5)]
        trials: u32,
        /// Seed for the inner-product sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Oracle {
    None,
    Triangulation,
    Montecarlo,
}

/// Parses the process arguments, runs the command, and returns the exit
/// code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let start = Instant::now();
    let outcome = dispatch(cli.command);
    eprintln!("timing: total {} ms", start.elapsed().as_millis());
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_INPUT
        }
    }
}

fn dispatch(command: Command) -> Result<i32, InputError> {
    match command {
        Command::FanValidate { fan } => cmd_fan_validate(&fan),
        Command::Cubical {
            fan,
            z,
            inner_product,
        } => cmd_cubical(&fan, &z, inner_product.as_deref()),
        Command::Volume {
            fan,
            z,
            inner_product,
            oracle,
            seed,
            samples,
        } => cmd_volume(&fan, &z, inner_product.as_deref(), oracle, seed, samples),
        Command::Volpoly {
            fan,
            inner_product,
            symbolic,
            z,
        } => cmd_volpoly(&fan, inner_product.as_deref(), symbolic, z.as_deref()),
        Command::Bergman {
            matroid,
            building_set,
            output,
            z_output,
        } => cmd_bergman(&matroid, &building_set, output.as_deref(), z_output.as_deref()),
        Command::Verify {
            fan,
            matroid,
            z,
            building_set,
            trials,
            seed,
        } => cmd_verify(
            fan.as_deref(),
            matroid.as_deref(),
            z.as_deref(),
            &building_set,
            trials,
            seed,
        ),
    }
}

fn read_file(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path)
        .map_err(|e| InputError::new(format!("cannot read {}: {e}", path.display())))
}

fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn digest_entry(path: &Path, text: &str) -> Value {
    json!({
        "path": path.display().to_string(),
        "sha256": sha256_hex(text),
    })
}

fn emit(report: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(report).expect("report serializes")
    );
}

fn rat_value(r: &Rat) -> Value {
    Value::String(r.to_string())
}

fn z_value(z: &ZValue) -> Value {
    serde_json::to_value(z).expect("truncation values serialize")
}

fn load_fan(path: &Path, inputs: &mut Map<String, Value>) -> Result<(Fan, WeightFunction), InputError> {
    let text = read_file(path)?;
    inputs.insert("fan".into(), digest_entry(path, &text));
    fan_from_json(&text)
        .map_err(|e| InputError::new(format!("bad fan file {}: {e}", path.display())))
}

fn load_ip(
    path: Option<&Path>,
    dim: usize,
    inputs: &mut Map<String, Value>,
) -> Result<InnerProduct, InputError> {
    match path {
        None => {
            inputs.insert("inner_product".into(), json!("standard dot product"));
            Ok(InnerProduct::standard_dot(dim))
        }
        Some(p) => {
            let text = read_file(p)?;
            inputs.insert("inner_product".into(), digest_entry(p, &text));
            let ip = InnerProduct::from_json(&text)
                .map_err(|e| InputError::new(format!("bad inner product {}: {e}", p.display())))?;
            if ip.dim() != dim {
                return Err(InputError::new(format!(
                    "inner product is {}x{} but the fan lives in dimension {dim}",
                    ip.dim(),
                    ip.dim(),
                )));
            }
            Ok(ip)
        }
    }
}

fn load_z(path: &Path, inputs: &mut Map<String, Value>) -> Result<ZValue, InputError> {
    let text = read_file(path)?;
    inputs.insert("z".into(), digest_entry(path, &text));
    serde_json::from_str(&text)
        .map_err(|e| InputError::new(format!("bad truncation values {}: {e}", path.display())))
}

fn cubicality_fields(c: &Cubicality, report: &mut Map<String, Value>) {
    match c {
        Cubicality::Cubical => {
            report.insert("classification".into(), json!("cubical"));
        }
        Cubicality::PseudoCubical { tight } => {
            report.insert("classification".into(), json!("pseudo-cubical"));
            report.insert(
                "tight_pairs".into(),
                Value::Array(
                    tight
                        .iter()
                        .map(|(face, ray)| json!({"face": face.key(), "ray": ray}))
                        .collect(),
                ),
            );
        }
        Cubicality::Neither { tau, rho } => {
            report.insert("classification".into(), json!("neither"));
            report.insert(
                "witness".into(),
                json!({"face": tau.key(), "ray": rho}),
            );
        }
    }
}

fn cmd_fan_validate(path: &Path) -> Result<i32, InputError> {
    let text = read_file(path)?;
    let mut inputs = Map::new();
    inputs.insert("fan".into(), digest_entry(path, &text));

    let mut report = Map::new();
    report.insert("command".into(), json!("fan-validate"));
    report.insert("inputs".into(), Value::Object(inputs));

    let (fan, weights) = match fan_from_json(&text) {
        Ok(pair) => pair,
        Err(FanError::Json(msg)) => {
            return Err(InputError::new(format!(
                "malformed fan file {}: {msg}",
                path.display()
            )));
        }
        Err(other) => {
            report.insert("valid".into(), json!(false));
            report.insert("violations".into(), json!([other.to_string()]));
            emit(&Value::Object(report));
            return Ok(EXIT_FAIL);
        }
    };

    let validation = fan.validate();
    let balancing = check_balancing(&fan, &weights)
        .map_err(|e| InputError::new(format!("balancing check failed: {e}")))?;
    report.insert("valid".into(), json!(validation.is_valid()));
    report.insert("violations".into(), json!(validation.messages()));
    report.insert("ambient_dim".into(), json!(fan.ambient_dim()));
    report.insert("dimension".into(), json!(fan.dimension()));
    report.insert("rays".into(), json!(fan.rays().len()));
    report.insert("max_cones".into(), json!(fan.max_cones().len()));
    report.insert("balanced".into(), json!(balancing.is_balanced()));
    report.insert(
        "balancing_failures".into(),
        Value::Array(
            balancing
                .failures
                .iter()
                .map(|f| json!(f.face.key()))
                .collect(),
        ),
    );
    let valid = validation.is_valid();
    emit(&Value::Object(report));
    Ok(if valid { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_cubical(fan_path: &Path, z_path: &Path, ip_path: Option<&Path>) -> Result<i32, InputError> {
    let mut inputs = Map::new();
    let (fan, _weights) = load_fan(fan_path, &mut inputs)?;
    let ip = load_ip(ip_path, fan.ambient_dim(), &mut inputs)?;
    let z = load_z(z_path, &mut inputs)?;

    let classification = is_cubical(&fan, &ip, &z)
        .map_err(|e| InputError::new(format!("cannot classify: {e}")))?;

    let mut report = Map::new();
    report.insert("command".into(), json!("cubical"));
    report.insert("inputs".into(), Value::Object(inputs));
    cubicality_fields(&classification, &mut report);
    emit(&Value::Object(report));
    Ok(EXIT_OK)
}

fn cmd_volume(
    fan_path: &Path,
    z_path: &Path,
    ip_path: Option<&Path>,
    oracle: Oracle,
    seed: u64,
    samples: u64,
) -> Result<i32, InputError> {
    if samples == 0 {
        return Err(InputError::new("--samples must be at least 1"));
    }
    let mut inputs = Map::new();
    let (fan, weights) = load_fan(fan_path, &mut inputs)?;
    let ip = load_ip(ip_path, fan.ambient_dim(), &mut inputs)?;
    let z = load_z(z_path, &mut inputs)?;

    let mut report = Map::new();
    report.insert("command".into(), json!("volume"));
    report.insert("inputs".into(), Value::Object(inputs));
    report.insert("dimension".into(), json!(fan.dimension()));

    let exact = match complex_volume(&fan, &weights, &ip, &z) {
        Ok(v) => v,
        Err(NormalError::NotPseudoCubical { cone, tau, rho }) => {
            report.insert("error".into(), json!("truncation values are not pseudo-cubical"));
            report.insert(
                "witness".into(),
                json!({"cone": cone.key(), "face": tau.key(), "ray": rho}),
            );
            emit(&Value::Object(report));
            return Ok(EXIT_FAIL);
        }
        Err(e) => return Err(InputError::new(format!("cannot compute volume: {e}"))),
    };
    report.insert("volume".into(), rat_value(&exact));

    let mut matched = true;
    match oracle {
        Oracle::None => {}
        Oracle::Triangulation => {
            let mut total = Rat::zero();
            for sigma in fan.max_cones() {
                let w = weights
                    .get(sigma)
                    .map_err(|e| InputError::new(e.to_string()))?;
                let v = volume_oracle_triangulation(&fan, &ip, &z, sigma)
                    .map_err(|e| InputError::new(format!("triangulation oracle failed: {e}")))?;
                total += &(w * &v);
            }
            matched = total == exact;
            report.insert(
                "oracle".into(),
                json!({
                    "kind": "triangulation",
                    "value": total.to_string(),
                    "match": matched,
                }),
            );
        }
        Oracle::Montecarlo => {
            let mut master = SplitMix64::new(seed);
            let mut estimate = 0.0_f64;
            let mut variance = 0.0_f64;
            let mut hits = 0_u64;
            for sigma in fan.max_cones() {
                let cone_seed = master.next_u64();
                let w = weights
                    .get(sigma)
                    .map_err(|e| InputError::new(e.to_string()))?
                    .to_f64();
                let est = volume_oracle_montecarlo(&fan, &ip, &z, sigma, samples, cone_seed)
                    .map_err(|e| InputError::new(format!("monte carlo oracle failed: {e}")))?;
                estimate += w * est.estimate;
                variance += (w * est.stderr).powi(2);
                hits += est.hits;
            }
            let stderr = variance.sqrt();
            let deviation = (estimate - exact.to_f64()).abs();
            matched = deviation <= 4.0 * stderr || deviation == 0.0;
            report.insert(
                "oracle".into(),
                json!({
                    "kind": "montecarlo",
                    "estimate": estimate,
                    "stderr": stderr,
                    "samples_per_cone": samples,
                    "hits": hits,
                    "seed": seed,
                    "within_four_sigma": matched,
                }),
            );
        }
    }
    emit(&Value::Object(report));
    Ok(if matched { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_volpoly(
    fan_path: &Path,
    ip_path: Option<&Path>,
    symbolic: bool,
    z_path: Option<&Path>,
) -> Result<i32, InputError> {
    if !symbolic && z_path.is_none() {
        return Err(InputError::new("pass --symbolic, --z <file>, or both"));
    }
    let mut inputs = Map::new();
    let (fan, weights) = load_fan(fan_path, &mut inputs)?;
    let ip = load_ip(ip_path, fan.ambient_dim(), &mut inputs)?;
    let z = z_path.map(|p| load_z(p, &mut inputs)).transpose()?;

    let mut report = Map::new();
    report.insert("command".into(), json!("volpoly"));
    report.insert("inputs".into(), Value::Object(inputs));
    report.insert("degree".into(), json!(fan.dimension()));

    let fail = |mut report: Map<String, Value>, face: Cone| {
        report.insert("error".into(), json!("weighted fan is not balanced"));
        report.insert("face".into(), json!(face.key()));
        emit(&Value::Object(report));
        Ok(EXIT_FAIL)
    };

    if symbolic {
        let poly = match volume_polynomial_symbolic(&fan, &weights, &ip) {
            Ok(p) => p,
            Err(ChowError::NotBalanced { face }) => return fail(report, face),
            Err(e) => return Err(InputError::new(format!("cannot expand polynomial: {e}"))),
        };
        let poly_json: Value = serde_json::from_str(&poly.to_json())
            .expect("polynomial serialization is valid JSON");
        report.insert("polynomial".into(), poly_json);
        report.insert("display".into(), json!(poly.to_string()));
        report.insert("terms".into(), json!(poly.num_terms()));
        if let Some(z) = &z {
            let value = poly
                .eval(z)
                .map_err(|e| InputError::new(format!("cannot evaluate polynomial: {e}")))?;
            report.insert("value".into(), rat_value(&value));
        }
    } else {
        let z = z.expect("checked above");
        let value = match volume_polynomial_eval(&fan, &weights, &ip, &z) {
            Ok(v) => v,
            Err(ChowError::NotBalanced { face }) => return fail(report, face),
            Err(e) => return Err(InputError::new(format!("cannot evaluate polynomial: {e}"))),
        };
        report.insert("value".into(), rat_value(&value));
    }
    emit(&Value::Object(report));
    Ok(EXIT_OK)
}

/// Loads a matroid plus building set, reporting axiom violations (exit 1)
/// through `report` and hard input problems as `InputError` (exit 2).
fn load_matroid_and_building_set(
    matroid_path: &Path,
    building_set: &str,
    inputs: &mut Map<String, Value>,
    report: &mut Map<String, Value>,
) -> Result<Result<(Matroid, BTreeSet<u64>), i32>, InputError> {
    let text = read_file(matroid_path)?;
    inputs.insert("matroid".into(), digest_entry(matroid_path, &text));
    let matroid = match Matroid::from_json(&text) {
        Ok(m) => m,
        Err(MatroidError::Json(msg)) => {
            return Err(InputError::new(format!(
                "malformed matroid file {}: {msg}",
                matroid_path.display()
            )));
        }
        Err(other) => {
            report.insert("valid".into(), json!(false));
            report.insert("error".into(), json!(other.to_string()));
            return Ok(Err(EXIT_FAIL));
        }
    };
    let gset = if building_set == "max" {
        inputs.insert("building_set".into(), json!("max"));
        matroid.maximal_building_set()
    } else {
        let path = PathBuf::from(building_set);
        let text = read_file(&path)?;
        inputs.insert("building_set".into(), digest_entry(&path, &text));
        match building_set_from_json(&matroid, &text) {
            Ok(g) => g,
            Err(MatroidError::Json(msg)) => {
                return Err(InputError::new(format!(
                    "malformed building set {}: {msg}",
                    path.display()
                )));
            }
            Err(other) => {
                report.insert("valid".into(), json!(false));
                report.insert("error".into(), json!(other.to_string()));
                return Ok(Err(EXIT_FAIL));
            }
        }
    };
    Ok(Ok((matroid, gset)))
}

fn building_set_value(matroid: &Matroid, gset: &BTreeSet<u64>) -> Value {
    Value::Array(
        gset.iter()
            .map(|&g| json!(matroid.elements_of(g)))
            .collect(),
    )
}

fn cmd_bergman(
    matroid_path: &Path,
    building_set: &str,
    output: Option<&Path>,
    z_output: Option<&Path>,
) -> Result<i32, InputError> {
    let mut inputs = Map::new();
    let mut report = Map::new();
    report.insert("command".into(), json!("bergman"));

    let loaded = load_matroid_and_building_set(matroid_path, building_set, &mut inputs, &mut report)?;
    let (matroid, gset) = match loaded {
        Ok(pair) => pair,
        Err(code) => {
            report.insert("inputs".into(), Value::Object(inputs));
            emit(&Value::Object(report));
            return Ok(code);
        }
    };
    report.insert("inputs".into(), Value::Object(inputs));
    report.insert(
        "matroid".into(),
        json!({
            "ground": matroid.ground(),
            "rank": matroid.rank(),
            "flats": matroid.flats().len(),
        }),
    );
    report.insert("building_set".into(), building_set_value(&matroid, &gset));

    let built = match construct_cubical_z(&matroid, &gset) {
        Ok(b) => b,
        Err(MatroidError::CubicalSearchExhausted { attempts, scale }) => {
            report.insert("valid".into(), json!(false));
            report.insert(
                "error".into(),
                json!(format!(
                    "no cubical value certified after {attempts} attempts (last scale {scale})"
                )),
            );
            emit(&Value::Object(report));
            return Ok(EXIT_FAIL);
        }
        Err(e) => return Err(InputError::new(format!("construction failed: {e}"))),
    };

    report.insert(
        "fan".into(),
        json!({
            "ambient_dim": built.fan.ambient_dim(),
            "dimension": built.fan.dimension(),
            "rays": built.fan.rays().len(),
            "max_cones": built.fan.max_cones().len(),
        }),
    );
    let certificate: Map<String, Value> = built
        .certificate
        .iter()
        .map(|(cone, coeffs)| {
            let table: Map<String, Value> = coeffs
                .iter()
                .map(|(ray, a)| (ray.clone(), rat_value(a)))
                .collect();
            (cone.key(), Value::Object(table))
        })
        .collect();
    report.insert(
        "cubical".into(),
        json!({
            "scale": built.scale.to_string(),
            "attempts": built.attempts,
            "z": z_value(&built.z),
            "min_coefficient": built.min_coefficient.as_ref().map(Rat::to_string),
            "certificate": Value::Object(certificate),
        }),
    );

    let mut written = Map::new();
    if let Some(path) = output {
        fs::write(path, fan_to_json(&built.fan, &built.weights))
            .map_err(|e| InputError::new(format!("cannot write {}: {e}", path.display())))?;
        written.insert("fan".into(), json!(path.display().to_string()));
    }
    if let Some(path) = z_output {
        let text = serde_json::to_string_pretty(&built.z).expect("truncation values serialize");
        fs::write(path, text)
            .map_err(|e| InputError::new(format!("cannot write {}: {e}", path.display())))?;
        written.insert("z".into(), json!(path.display().to_string()));
    }
    if !written.is_empty() {
        report.insert("written".into(), Value::Object(written));
    }
    emit(&Value::Object(report));
    Ok(EXIT_OK)
}

/// One `verify` trial: sample integer matrices A and test inner products
/// `c·I + AᵀA`, doubling the diagonal shift c until the truncation values
/// are at least pseudo-cubical, then compare the two volume computations.
fn run_trial(
    fan: &Fan,
    weights: &WeightFunction,
    z: &ZValue,
    rng: &mut SplitMix64,
) -> Result<Value, InputError> {
    let n = fan.ambient_dim();
    for _ in 0..RESAMPLE_CAP {
        let entries: Vec<Vec<i64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.next_int(-3, 3)).collect())
            .collect();
        let rows: Vec<&[i64]> = entries.iter().map(Vec::as_slice).collect();
        let a = RatMatrix::from_int_rows(&rows);
        let b = a.transpose().mul_mat(&a);
        for shift in 0..=SHIFT_CAP {
            let c = Rat::from_int(1i64 << shift.min(62));
            let matrix = RatMatrix::from_fn(n, n, |i, j| {
                let mut v = b.get(i, j).clone();
                if i == j {
                    v += &c;
                }
                v
            });
            let ip = InnerProduct::new(matrix)
                .map_err(|e| InputError::new(format!("sampled inner product rejected: {e}")))?;
            let outcome = verify_volume_identity(fan, weights, &ip, z)
                .map_err(|e| InputError::new(format!("verification failed: {e}")))?;
            if outcome.cubicality != "neither" {
                return Ok(json!({
                    "matrix": entries,
                    "diagonal_shift": c.to_string(),
                    "classification": outcome.cubicality,
                    "tight_pairs": outcome.tight_pairs,
                    "chow_volume": outcome.chow_volume.to_string(),
                    "normal_complex_volume":
                        outcome.normal_complex_volume.as_ref().map(Rat::to_string),
                    "equal": outcome.identity_holds,
                }));
            }
        }
    }
    Ok(json!({
        "error": "no admissible inner product found",
    }))
}

fn cmd_verify(
    fan_path: Option<&Path>,
    matroid_path: Option<&Path>,
    z_path: Option<&Path>,
    building_set: &str,
    trials: u32,
    seed: u64,
) -> Result<i32, InputError> {
    let mut inputs = Map::new();
    let mut report = Map::new();
    report.insert("command".into(), json!("verify"));
    report.insert("seed".into(), json!(seed));

    let (fan, weights, z) = match (fan_path, matroid_path) {
        (Some(fp), None) => {
            let (fan, weights) = load_fan(fp, &mut inputs)?;
            let zp = z_path.ok_or_else(|| InputError::new("--fan mode requires --z"))?;
            let z = load_z(zp, &mut inputs)?;
            (fan, weights, z)
        }
        (None, Some(mp)) => {
            let loaded =
                load_matroid_and_building_set(mp, building_set, &mut inputs, &mut report)?;
            let (matroid, gset) = match loaded {
                Ok(pair) => pair,
                Err(code) => {
                    report.insert("inputs".into(), Value::Object(inputs));
                    emit(&Value::Object(report));
                    return Ok(code);
                }
            };
            let built = match construct_cubical_z(&matroid, &gset) {
                Ok(b) => b,
                Err(MatroidError::CubicalSearchExhausted { attempts, scale }) => {
                    report.insert("inputs".into(), Value::Object(inputs));
                    report.insert(
                        "error".into(),
                        json!(format!(
                            "no cubical value certified after {attempts} attempts (last scale {scale})"
                        )),
                    );
                    emit(&Value::Object(report));
                    return Ok(EXIT_FAIL);
                }
                Err(e) => return Err(InputError::new(format!("construction failed: {e}"))),
            };
            report.insert(
                "constructed".into(),
                json!({
                    "scale": built.scale.to_string(),
                    "z": z_value(&built.z),
                }),
            );
            (built.fan, built.weights, built.z)
        }
        _ => {
            return Err(InputError::new(
                "pass exactly one of --fan <file> or --matroid <file>",
            ));
        }
    };
    report.insert("inputs".into(), Value::Object(inputs));
    report.insert("dimension".into(), json!(fan.dimension()));

    // The polynomial side once, with the dot product; every trial must
    // reproduce this number from its own inner product.
    let dot = InnerProduct::standard_dot(fan.ambient_dim());
    let chow = match volume_polynomial_eval(&fan, &weights, &dot, &z) {
        Ok(v) => v,
        Err(ChowError::NotBalanced { face }) => {
            report.insert("error".into(), json!("weighted fan is not balanced"));
            report.insert("face".into(), json!(face.key()));
            emit(&Value::Object(report));
            return Ok(EXIT_FAIL);
        }
        Err(e) => return Err(InputError::new(format!("cannot evaluate polynomial: {e}"))),
    };
    report.insert("chow_volume".into(), rat_value(&chow));

    let mut rng = SplitMix64::new(seed);
    let mut trial_values = Vec::new();
    let mut all_equal = true;
    for index in 1..=trials {
        let mut value = run_trial(&fan, &weights, &z, &mut rng)?;
        let object = value.as_object_mut().expect("trial is an object");
        object.insert("trial".into(), json!(index));
        let ok = object.get("equal") == Some(&json!(true))
            && object.get("chow_volume") == Some(&json!(chow.to_string()));
        if !ok {
            all_equal = false;
        }
        trial_values.push(value);
    }
    report.insert("trials".into(), Value::Array(trial_values));
    report.insert("all_equal".into(), json!(all_equal));
    emit(&Value::Object(report));
    Ok(if all_equal { EXIT_OK } else { EXIT_FAIL })
}
