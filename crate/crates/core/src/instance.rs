//! Random sparse-recovery instances with coherent cosine sensing matrices.

use crate::criticality::{dist_subdiff_q_l1l2, fixed_point_residual};
use crate::ext::ExtReal;
use crate::linalg::{column, dot, mat_vec, norm1, norm2, norm2_sq};
use crate::models::{l1l2_problem, l1sk_problem, L1L2Problem, L1SkProblem};
use crate::problem::{BlockPartition, ProblemError};
use crate::prox::BoxBounds;
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;

/// Certificate bound for L1/SK instances.
pub const L1SK_CERTIFICATE_TOL: f64 = 1e-6;
/// Certificate bound for L1/L2 instances.
pub const L1L2_CERTIFICATE_TOL: f64 = 1e-8;
/// Resampling budget for the L1/L2 construction.
pub const L1L2_MAX_ATTEMPTS: u64 = 100;

const MAGIC: &[u8; 8] = b"MPGAINST";
const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot place {r} indices with separation {sep} in 0..{n}")]
    InfeasibleSupport { n: usize, r: usize, sep: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("construction certificate failed: residual {residual:e} > {tol:e}")]
    CertificateFailed { residual: f64, tol: f64 },
    #[error("no certified L1/L2 instance after {} attempts (seeds {seeds:?})", seeds.len())]
    ConstructionExhausted { seeds: Vec<u64> },
    #[error("every column is orthogonal to b; no one-sparse starting point exists")]
    DegenerateMeasurements,
    #[error("starting point violates F(x0) < 1 + (lambda/2)||b||^2: {value} >= {bound}")]
    StartAboveLevel { value: f64, bound: f64 },
    #[error("malformed instance file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    L1L2,
    L1SK,
}

impl Model {
    fn tag(self) -> u64 {
        match self {
            Model::L1L2 => 0,
            Model::L1SK => 1,
        }
    }

    fn from_tag(tag: u64) -> Option<Self> {
        match tag {
            0 => Some(Model::L1L2),
            1 => Some(Model::L1SK),
            _ => None,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::L1L2 => "L1L2",
            Model::L1SK => "L1SK",
        })
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "L1L2" | "L1/L2" => Ok(Model::L1L2),
            "L1SK" | "L1/SK" => Ok(Model::L1SK),
            other => Err(format!("unknown model '{other}' (expected L1L2 or L1SK)")),
        }
    }
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn mix_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// Sub-seed streams of one instance seed.
const STREAM_MATRIX: u64 = 1;
const STREAM_SUPPORT: u64 = 2;
const STREAM_SIGNAL: u64 = 3;
const STREAM_INIT: u64 = 4;

/// Oversampled cosine matrix: column `j` (1-based) is `cos(2 pi w j / D) / sqrt(m)`
/// with `w` uniform on `[0, 1]^m`, drawn once.
pub fn gen_dct_matrix(m: usize, n: usize, d: f64, seed: u64) -> DMatrix<f64> {
    assert!(m >= 1 && n >= 1 && d > 0.0, "need m, n >= 1 and D > 0");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    let scale = 1.0 / (m as f64).sqrt();
    DMatrix::from_fn(m, n, |i, j| scale * (2.0 * std::f64::consts::PI * omega[i] * (j + 1) as f64 / d).cos())
}

/// Minimum index gap for coherence parameter `d`: `ceil(2 d)`.
pub fn separation(d: f64) -> usize {
    (2.0 * d).ceil().max(1.0) as usize
}

/// `r` sorted indices in `0..n` with pairwise gaps at least `ceil(2D)`,
/// uniform over all such sets.
///
/// Draws `r` distinct positions in the shrunk range
/// `0..n - (r-1)(sep-1)` and re-inflates the `k`-th by `k (sep - 1)`.
pub fn gen_support(n: usize, r: usize, d: f64, seed: u64) -> Result<Vec<usize>, InstanceError> {
    let sep = separation(d);
    if r == 0 || d <= 0.0 {
        return Err(InstanceError::InvalidParameter("support needs r >= 1 and D > 0".into()));
    }
    let needed = (r - 1) * sep + 1;
    if needed > n {
        return Err(InstanceError::InfeasibleSupport { n, r, sep });
    }
    let shrunk = n - (r - 1) * (sep - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = sample(&mut rng, shrunk, r).into_vec();
    picks.sort_unstable();
    Ok(picks.into_iter().enumerate().map(|(k, p)| p + k * (sep - 1)).collect())
}

/// `+-1` with a fair coin on `support`, zero elsewhere.
pub fn gen_signal_l1sk(n: usize, support: &[usize], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    for &j in support {
        x[j] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    }
    x
}

/// `s * 10^(3u)` on `support` with a fair sign `s` and `u ~ U[0, 1]`, so
/// magnitudes span `[1, 1000]`.
pub fn gen_signal_l1l2(n: usize, support: &[usize], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    for &j in support {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let u: f64 = rng.gen();
        x[j] = sign * 10f64.powf(3.0 * u);
    }
    x
}

/// One generated problem with its ground truth.
#[derive(Debug, Clone)]
pub struct Instance {
    pub model: Model,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub d: f64,
    pub lambda: f64,
    /// K-norm order; unused (0) for L1/L2.
    pub k: usize,
    pub seed: u64,
    pub a: Arc<DMatrix<f64>>,
    pub b: Vec<f64>,
    pub x_true: Vec<f64>,
    pub bounds: BoxBounds,
    /// Certificate value measured at construction.
    pub certificate: f64,
}

impl Instance {
    pub fn support(&self) -> Vec<usize> {
        self.x_true.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, _)| j).collect()
    }

    pub fn l1sk_problem(&self, blocks: usize) -> Result<L1SkProblem, InstanceError> {
        let partition = BlockPartition::uniform(self.n, blocks)?;
        if self.k < 1 || self.k > self.n {
            return Err(InstanceError::InvalidParameter(format!("K = {} out of range", self.k)));
        }
        Ok(l1sk_problem(self.a.clone(), self.b.clone(), self.lambda, self.k, self.bounds.clone(), partition))
    }

    pub fn l1l2_problem(&self, blocks: usize) -> Result<L1L2Problem, InstanceError> {
        let partition = BlockPartition::uniform(self.n, blocks)?;
        Ok(l1l2_problem(self.a.clone(), self.b.clone(), self.lambda, self.bounds.clone(), partition))
    }

    /// `1 + (lambda/2)||b||^2`, the liminf of the L1/L2 objective at the origin.
    pub fn l1l2_level_bound(&self) -> f64 {
        1.0 + 0.5 * self.lambda * norm2_sq(&self.b)
    }
}

fn check_dims(m: usize, n: usize, r: usize, d: f64, lambda: f64) -> Result<(), InstanceError> {
    if m == 0 || n == 0 || r == 0 {
        return Err(InstanceError::InvalidParameter("m, n, r must be positive".into()));
    }
    if !(d > 0.0) || !(lambda > 0.0) {
        return Err(InstanceError::InvalidParameter("D and lambda must be positive".into()));
    }
    Ok(())
}

/// L1/SK instance: `b = A x_true` and box `[-2, 2]^n`; `x_true` is checked
/// to be a fixed point of the iteration maps.
pub fn make_l1sk_instance(m: usize, n: usize, r: usize, d: f64, lambda: f64, k: usize, seed: u64) -> Result<Instance, InstanceError> {
    check_dims(m, n, r, d, lambda)?;
    if k < 1 || k > n {
        return Err(InstanceError::InvalidParameter(format!("K = {k} must lie in 1..={n}")));
    }
    let a = Arc::new(gen_dct_matrix(m, n, d, mix_seed(seed, STREAM_MATRIX, 0)));
    let support = gen_support(n, r, d, mix_seed(seed, STREAM_SUPPORT, 0))?;
    let x_true = gen_signal_l1sk(n, &support, mix_seed(seed, STREAM_SIGNAL, 0));
    let b = mat_vec(&a, &x_true);
    let bounds = BoxBounds::symmetric(n, 2.0).expect("finite symmetric box");
    let mut inst = Instance { model: Model::L1SK, m, n, r, d, lambda, k, seed, a, b, x_true, bounds, certificate: f64::NAN };

    let problem = inst.l1sk_problem(1)?;
    let y = problem.initial_dual(&inst.x_true)?;
    let residual = fixed_point_residual(&problem, &inst.x_true, &y, 1000.0, &[1.0])
        .map_err(|e| InstanceError::Format(e.to_string()))?;
    if !(residual <= L1SK_CERTIFICATE_TOL) {
        return Err(InstanceError::CertificateFailed { residual, tol: L1SK_CERTIFICATE_TOL });
    }
    inst.certificate = residual;
    Ok(inst)
}

/// L1/L2 instance: `b = A x_true - rho` with `rho` chosen so that
/// `x_true` is a critical point over the box `[-1000, 1000]^n`.
///
/// On the support `S`, stationarity reads
/// `lambda a_j^T rho = w_j - sign(x_j)/||x||` with `w = (||x||_1/||x||^3) x`;
/// `rho` is the minimum-norm solution `A_S (A_S^T A_S)^{-1} c / lambda`.
/// Off the support it needs `|lambda a_j^T rho| <= 1/||x||`. Draws failing
/// the final certificate are resampled with a new seed offset.
pub fn make_l1l2_instance(m: usize, n: usize, r: usize, d: f64, lambda: f64, seed: u64) -> Result<Instance, InstanceError> {
    check_dims(m, n, r, d, lambda)?;
    if r > m {
        return Err(InstanceError::InvalidParameter(format!("need r <= m, got r = {r}, m = {m}")));
    }
    let mut seeds = Vec::new();
    for attempt in 0..L1L2_MAX_ATTEMPTS {
        let attempt_seed = if attempt == 0 { seed } else { mix_seed(seed, 0x0A77_E3D7, attempt) };
        seeds.push(attempt_seed);
        if let Some(inst) = try_l1l2(m, n, r, d, lambda, seed, attempt_seed)? {
            return Ok(inst);
        }
    }
    Err(InstanceError::ConstructionExhausted { seeds })
}

fn try_l1l2(m: usize, n: usize, r: usize, d: f64, lambda: f64, seed: u64, attempt_seed: u64) -> Result<Option<Instance>, InstanceError> {
    let a = Arc::new(gen_dct_matrix(m, n, d, mix_seed(attempt_seed, STREAM_MATRIX, 0)));
    let support = gen_support(n, r, d, mix_seed(attempt_seed, STREAM_SUPPORT, 0))?;
    let x_true = gen_signal_l1l2(n, &support, mix_seed(attempt_seed, STREAM_SIGNAL, 0));
    let bounds = BoxBounds::symmetric(n, 1000.0).expect("finite symmetric box");

    let nx = norm2(&x_true);
    let l1 = norm1(&x_true);
    let rhs: Vec<f64> = support
        .iter()
        .map(|&j| {
            let w = l1 / (nx * nx * nx) * x_true[j];
            (w - x_true[j].signum() / nx) / lambda
        })
        .collect();

    let a_s = DMatrix::from_fn(m, r, |i, k| a[(i, support[k])]);
    let gram = a_s.transpose() * &a_s;
    let Some(chol) = gram.cholesky() else {
        return Ok(None);
    };
    let coef = chol.solve(&nalgebra::DVector::from_vec(rhs));
    let rho = &a_s * coef;

    let bound = 1.0 / nx;
    let off_support_ok = (0..n)
        .filter(|j| x_true[*j] == 0.0)
        .all(|j| (lambda * dot(column(&a, j), rho.as_slice())).abs() <= bound);
    if !off_support_ok {
        return Ok(None);
    }

    let ax = mat_vec(&a, &x_true);
    let b: Vec<f64> = ax.iter().zip(rho.iter()).map(|(u, v)| u - v).collect();
    let y: Vec<f64> = x_true.iter().map(|v| v / nx).collect();
    let cert = match dist_subdiff_q_l1l2(&x_true, &y, &a, &b, lambda, &bounds) {
        Ok(c) => c,
        Err(_) => return Ok(None),
    };
    if !(cert <= L1L2_CERTIFICATE_TOL) {
        return Ok(None);
    }
    Ok(Some(Instance {
        model: Model::L1L2,
        m,
        n,
        r,
        d,
        lambda,
        k: 0,
        seed,
        a,
        b,
        x_true,
        bounds,
        certificate: cert,
    }))
}

/// Starting point and whether it had to be clamped into the box.
#[derive(Debug, Clone)]
pub struct InitialPoint {
    pub x: Vec<f64>,
    pub clamped: bool,
}

/// Starting point for an instance.
///
/// L1/SK: `x_true + 0.2 e` with `e` uniform on `[-1, 1]^n`, clamped into the
/// box. L1/L2: `sign(a_j^T b) min(|a_j^T b| / ||a_j||^2, upper) e_j` for the
/// first column with `a_j^T b != 0`; it must satisfy
/// `F(x0) < 1 + (lambda/2)||b||^2`.
pub fn init_point(inst: &Instance, seed: u64) -> Result<InitialPoint, InstanceError> {
    match inst.model {
        Model::L1SK => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, STREAM_INIT, 0));
            let mut x: Vec<f64> = inst.x_true.iter().map(|v| v + 0.2 * rng.gen_range(-1.0..=1.0)).collect();
            let clamped = !inst.bounds.contains(&x);
            inst.bounds.clamp(&mut x);
            Ok(InitialPoint { x, clamped })
        }
        Model::L1L2 => {
            let (j0, corr) = (0..inst.n)
                .map(|j| (j, dot(column(&inst.a, j), &inst.b)))
                .find(|(_, c)| *c != 0.0)
                .ok_or(InstanceError::DegenerateMeasurements)?;
            let col_sq = norm2_sq(column(&inst.a, j0));
            let cap = if corr > 0.0 { inst.bounds.upper()[j0] } else { -inst.bounds.lower()[j0] };
            let mut x = vec![0.0; inst.n];
            x[j0] = corr.signum() * (corr.abs() / col_sq).min(cap);
            let problem = inst.l1l2_problem(1)?;
            let bound = inst.l1l2_level_bound();
            match problem.objective(&x) {
                ExtReal::Finite(v) if v < bound => Ok(InitialPoint { x, clamped: false }),
                other => Err(InstanceError::StartAboveLevel { value: other.to_f64(), bound }),
            }
        }
    }
}

/// Writes the binary container: an 8-byte magic followed by little-endian
/// 64-bit header fields (version, model tag, m, n, r, D, lambda, K, seed)
/// and the payload `A` (row-major), `b`, `x_true`, lower and upper bounds.
pub fn write_instance<W: Write>(inst: &Instance, mut w: W) -> io::Result<()> {
    w.write_all(MAGIC)?;
    for v in [FORMAT_VERSION, inst.model.tag(), inst.m as u64, inst.n as u64, inst.r as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&inst.d.to_le_bytes())?;
    w.write_all(&inst.lambda.to_le_bytes())?;
    w.write_all(&(inst.k as u64).to_le_bytes())?;
    w.write_all(&inst.seed.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * (inst.m * inst.n + inst.m + 3 * inst.n));
    for i in 0..inst.m {
        for j in 0..inst.n {
            buf.extend_from_slice(&inst.a[(i, j)].to_le_bytes());
        }
    }
    for v in inst.b.iter().chain(&inst.x_true).chain(inst.bounds.lower()).chain(inst.bounds.upper()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> io::Result<Vec<f64>> {
    let mut bytes = vec![0u8; 8 * count];
    r.read_exact(&mut bytes)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Reads a container written by [`write_instance`]. The construction
/// certificate is not stored and reads back as NaN.
pub fn read_instance<R: Read>(mut r: R) -> Result<Instance, InstanceError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(InstanceError::Format("bad magic".into()));
    }
    let version = read_u64(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(InstanceError::Format(format!("unsupported version {version}")));
    }
    let model = Model::from_tag(read_u64(&mut r)?).ok_or_else(|| InstanceError::Format("unknown model tag".into()))?;
    let m = read_u64(&mut r)? as usize;
    let n = read_u64(&mut r)? as usize;
    let rr = read_u64(&mut r)? as usize;
    let d = f64::from_bits(read_u64(&mut r)?);
    let lambda = f64::from_bits(read_u64(&mut r)?);
    let k = read_u64(&mut r)? as usize;
    let seed = read_u64(&mut r)?;
    if m == 0 || n == 0 || m.checked_mul(n).is_none() {
        return Err(InstanceError::Format("bad dimensions".into()));
    }
    let a_rows = read_f64s(&mut r, m * n)?;
    let a = DMatrix::from_row_slice(m, n, &a_rows);
    let b = read_f64s(&mut r, m)?;
    let x_true = read_f64s(&mut r, n)?;
    let lower = read_f64s(&mut r, n)?;
    let upper = read_f64s(&mut r, n)?;
    let bounds = BoxBounds::new(lower, upper).map_err(|e| InstanceError::Format(e.to_string()))?;
    Ok(Instance { model, m, n, r: rr, d, lambda, k, seed, a: Arc::new(a), b, x_true, bounds, certificate: f64::NAN })
}

/// Human-readable `key=value` summary.
pub fn manifest(inst: &Instance) -> String {
    let mut s = String::new();
    let mut line = |k: &str, v: String| {
        s.push_str(k);
        s.push('=');
        s.push_str(&v);
        s.push('\n');
    };
    line("format", format!("MPGAINST v{FORMAT_VERSION}"));
    line("model", inst.model.to_string());
    line("m", inst.m.to_string());
    line("n", inst.n.to_string());
    line("r", inst.r.to_string());
    line("D", inst.d.to_string());
    line("lambda", inst.lambda.to_string());
    line("K", inst.k.to_string());
    line("seed", inst.seed.to_string());
    line("box_lower_min", inst.bounds.lower().iter().cloned().fold(f64::INFINITY, f64::min).to_string());
    line("box_upper_max", inst.bounds.upper().iter().cloned().fold(f64::NEG_INFINITY, f64::max).to_string());
    line("norm_b", norm2(&inst.b).to_string());
    line("norm_x_true", norm2(&inst.x_true).to_string());
    line("support_size", inst.support().len().to_string());
    line("certificate", format!("{:e}", inst.certificate));
    s
}

/// Writes `path` and `path.manifest`.
pub fn save_instance(inst: &Instance, path: &Path) -> Result<(), InstanceError> {
    let file = fs::File::create(path)?;
    write_instance(inst, io::BufWriter::new(file))?;
    let mut manifest_path = path.as_os_str().to_owned();
    manifest_path.push(".manifest");
    fs::write(manifest_path, manifest(inst))?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<Instance, InstanceError> {
    let file = fs::File::open(path)?;
    read_instance(io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn dct_entries_are_bounded_and_reproducible() {
        let a = gen_dct_matrix(16, 40, 3.0, 5);
        let bound = 1.0 / 4.0;
        assert!(a.iter().all(|v| v.abs() <= bound + 1e-15));
        assert_eq!(a, gen_dct_matrix(16, 40, 3.0, 5));
        assert_ne!(a, gen_dct_matrix(16, 40, 3.0, 6));
    }

    fn mean_adjacent_coherence(d: f64) -> f64 {
        let mut total = 0.0;
        let seeds = 20;
        for s in 0..seeds {
            let a = gen_dct_matrix(64, 50, d, s);
            let mut acc = 0.0;
            for j in 0..49 {
                let (u, v) = (column(&a, j), column(&a, j + 1));
                acc += dot(u, v).abs() / (norm2(u) * norm2(v));
            }
            total += acc / 49.0;
        }
        total / seeds as f64
    }

    #[test]
    fn coherence_grows_with_d() {
        let c1 = mean_adjacent_coherence(1.0);
        let c10 = mean_adjacent_coherence(10.0);
        assert!(c10 > c1, "D=1: {c1}, D=10: {c10}");
        assert!(c10 > 0.9);
    }

    #[test]
    fn support_separation_and_errors() {
        for seed in 0..200 {
            let s = gen_support(10, 2, 2.0, seed).unwrap();
            assert!(s[1] - s[0] >= 4);
        }
        for seed in 0..50 {
            let s = gen_support(30, 1, 3.0, seed).unwrap();
            assert_eq!(s.len(), 1);
            assert!(s[0] < 30);
        }
        assert!(matches!(gen_support(5, 3, 2.0, 0), Err(InstanceError::InfeasibleSupport { .. })));
    }

    #[test]
    fn support_hits_every_feasible_configuration() {
        // n = 8, r = 2, gap >= 2
        let mut feasible = HashSet::new();
        for i in 0..8usize {
            for j in i + 2..8 {
                feasible.insert(vec![i, j]);
            }
        }
        assert_eq!(feasible.len(), 21);
        let mut seen = HashSet::new();
        for seed in 0..100_000 {
            let s = gen_support(8, 2, 1.0, seed).unwrap();
            assert!(feasible.contains(&s), "{s:?}");
            seen.insert(s);
        }
        assert_eq!(seen, feasible);
    }

    #[test]
    fn separation_holds_on_many_draws() {
        for seed in 0..10_000 {
            let d = 1.0 + (seed % 7) as f64 * 0.75;
            let s = gen_support(400, 12, d, seed).unwrap();
            let sep = separation(d);
            assert!(s.windows(2).all(|w| w[1] - w[0] >= sep));
        }
    }

    #[test]
    fn l1sk_signal_properties() {
        let support = gen_support(200, 10, 2.0, 1).unwrap();
        let x = gen_signal_l1sk(200, &support, 3);
        assert_eq!(x.iter().filter(|v| **v != 0.0).count(), 10);
        assert!(x.iter().all(|v| *v == 0.0 || v.abs() == 1.0));
        assert_eq!(x, gen_signal_l1sk(200, &support, 3));

        let mut positive = 0usize;
        let draws = 10_000;
        for s in 0..draws {
            positive += usize::from(gen_signal_l1sk(1, &[0], s as u64)[0] > 0.0);
        }
        assert!((positive as f64 / draws as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn l1l2_signal_dynamic_range() {
        let support: Vec<usize> = (0..100).map(|k| 3 * k).collect();
        let x = gen_signal_l1l2(300, &support, 9);
        let mags: Vec<f64> = support.iter().map(|&j| x[j].abs()).collect();
        assert!(mags.iter().all(|&v| (1.0..=1000.0).contains(&v)));
        assert!((0..300).filter(|j| j % 3 != 0).all(|j| x[j] == 0.0));
        let ratio = mags.iter().cloned().fold(0.0, f64::max) / mags.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(ratio > 500.0, "{ratio}");
    }

    #[test]
    fn mix_seed_is_deterministic_and_spreads() {
        assert_eq!(mix_seed(1, 2, 3), mix_seed(1, 2, 3));
        assert_ne!(mix_seed(1, 2, 3), mix_seed(1, 3, 2));
        assert_ne!(mix_seed(0, 0, 0), mix_seed(0, 0, 1));
    }
}
