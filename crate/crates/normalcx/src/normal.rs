//! Normal complexes of truncated cones.
//!
//! Fix a marked simplicial fan, a positive definite inner product `*`, and a
//! value `z_ρ` per ray. Truncating each maximal cone σ by the half-spaces
//! `x * u_ρ ≤ z_ρ` (one per ray of σ) cuts out a polytope `P_σ`. For each
//! face τ ⪯ σ there is a unique point `w_τ` in the span of τ meeting all of
//! τ's truncation hyperplanes; when every `w_τ` lies in the (relative
//! interior of the) face, `z` is called (pseudo-)cubical and the `w_τ` are
//! exactly the vertices of `P_σ`, which is then combinatorially a cube.
//! This module classifies truncation values, produces the vertex sets and a
//! labeled triangulation, and computes exact volumes three independent
//! ways: a closed-form sum of Gram-determinant ratios, a triangulation sum
//! of simplex determinants, and a Monte Carlo estimate (the only place
//! floating point is allowed).

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::arith::{ArithError, Rat, RatMatrix, RatVector};
use crate::fan::{Cone, Fan, FanError, RayId, WeightFunction};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NormalError {
    #[error("inner product matrix is not symmetric")]
    NotSymmetric,
    #[error("inner product matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("inner product is {found}-dimensional but the fan's ambient space is {expected}-dimensional")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cone <{key}> is not a face of the fan")]
    UnknownCone { key: String },
    #[error("no truncation value for ray {ray:?}")]
    MissingZ { ray: RayId },
    #[error(
        "truncation values are not pseudo-cubical on cone <{cone}>: \
         w of face <{tau}> violates the inequality of ray {rho:?}"
    )]
    NotPseudoCubical { cone: Cone, tau: Cone, rho: RayId },
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Fan(#[from] FanError),
}

/// A symmetric positive definite bilinear form, validated at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnerProduct {
    matrix: RatMatrix,
}

impl InnerProduct {
    pub fn new(matrix: RatMatrix) -> Result<Self, NormalError> {
        if !matrix.is_symmetric() {
            return Err(NormalError::NotSymmetric);
        }
        if !matrix.is_positive_definite()? {
            return Err(NormalError::NotPositiveDefinite);
        }
        Ok(InnerProduct { matrix })
    }

    /// The standard dot product on n-space.
    pub fn standard_dot(n: usize) -> Self {
        InnerProduct {
            matrix: RatMatrix::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.matrix
    }

    pub fn pair(&self, u: &RatVector, v: &RatVector) -> Rat {
        u.dot(&self.matrix.mul_vec(v))
    }

    pub fn from_json(text: &str) -> Result<Self, NormalError> {
        let file: InnerProductFile =
            serde_json::from_str(text).map_err(|e| NormalError::Fan(FanError::Json(e.to_string())))?;
        let rows = file.matrix.into_iter().map(RatVector::new).collect();
        let matrix = RatMatrix::from_rows(rows)?;
        InnerProduct::new(matrix)
    }

    pub fn to_json(&self) -> String {
        let file = InnerProductFile {
            matrix: self
                .matrix
                .rows()
                .into_iter()
                .map(|r| r.iter().cloned().collect())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("inner product serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct InnerProductFile {
    matrix: Vec<Vec<Rat>>,
}

/// One truncation value per ray id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZValue(BTreeMap<RayId, Rat>);

impl ZValue {
    pub fn new(values: BTreeMap<RayId, Rat>) -> Self {
        ZValue(values)
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Rat)>,
        S: Into<String>,
    {
        ZValue(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    /// Zero truncation on every ray of the fan.
    pub fn zero_for(fan: &Fan) -> Self {
        ZValue(fan.rays().keys().map(|id| (id.clone(), Rat::zero())).collect())
    }

    pub fn get(&self, id: &str) -> Option<&Rat> {
        self.0.get(id)
    }

    pub fn require(&self, id: &RayId) -> Result<&Rat, NormalError> {
        self.0
            .get(id)
            .ok_or_else(|| NormalError::MissingZ { ray: id.clone() })
    }

    pub fn insert(&mut self, id: impl Into<String>, value: Rat) {
        self.0.insert(id.into(), value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RayId, &Rat)> + '_ {
        self.0.iter()
    }

    /// The values on a cone's rays, in canonical ray order.
    pub fn restrict(&self, cone: &Cone) -> Result<RatVector, NormalError> {
        let vals = cone
            .rays()
            .map(|id| self.require(id).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RatVector::new(vals))
    }

    pub fn scale(&self, c: &Rat) -> ZValue {
        ZValue(self.0.iter().map(|(k, v)| (k.clone(), v * c)).collect())
    }

    /// Pointwise sum; both values must be defined on the same ray ids.
    pub fn add(&self, other: &ZValue) -> ZValue {
        assert!(
            self.0.keys().eq(other.0.keys()),
            "summands live on different ray sets"
        );
        ZValue(
            self.0
                .iter()
                .map(|(k, v)| (k.clone(), v + &other.0[k]))
                .collect(),
        )
    }
}

/// The unique point of span(τ) lying on all of τ's truncation hyperplanes,
/// `w * u_ρ = z_ρ` for ρ ∈ τ(1), together with its coordinates in the
/// marked generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WVector {
    pub cone: Cone,
    pub point: RatVector,
    /// Coefficients over τ's rays: `point = Σ coeffs[ρ] · u_ρ`.
    pub coeffs: BTreeMap<RayId, Rat>,
}

/// Classification of a truncation vector against a fan and inner product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cubicality {
    /// Every w-vector lies in the open face it belongs to.
    Cubical,
    /// Weak inequalities hold, with at least one tight pair (τ, ρ).
    PseudoCubical { tight: Vec<(Cone, RayId)> },
    /// Some strict inequality fails; (τ, ρ) is one failing pair.
    Neither { tau: Cone, rho: RayId },
}

impl Cubicality {
    pub fn is_cubical(&self) -> bool {
        matches!(self, Cubicality::Cubical)
    }

    /// Cubical values are in particular pseudo-cubical.
    pub fn is_pseudo_cubical(&self) -> bool {
        !matches!(self, Cubicality::Neither { .. })
    }
}

fn check_ip(fan: &Fan, ip: &InnerProduct) -> Result<(), NormalError> {
    if ip.dim() != fan.ambient_dim() {
        return Err(NormalError::DimensionMismatch {
            expected: fan.ambient_dim(),
            found: ip.dim(),
        });
    }
    Ok(())
}

fn check_z_total(fan: &Fan, z: &ZValue) -> Result<(), NormalError> {
    for id in fan.rays().keys() {
        z.require(id)?;
    }
    Ok(())
}

fn check_face(fan: &Fan, cone: &Cone) -> Result<(), NormalError> {
    if !fan.is_face(cone) {
        return Err(NormalError::UnknownCone { key: cone.key() });
    }
    Ok(())
}

/// Gram matrix of a cone's marked generators under the inner product, rows
/// and columns in canonical ray order.
pub fn gram(fan: &Fan, ip: &InnerProduct, cone: &Cone) -> Result<RatMatrix, NormalError> {
    check_ip(fan, ip)?;
    check_face(fan, cone)?;
    let gens: Vec<&RatVector> = cone
        .rays()
        .map(|id| fan.ray_vector(id).expect("ray exists"))
        .collect();
    Ok(RatMatrix::from_fn(gens.len(), gens.len(), |i, j| {
        ip.pair(gens[i], gens[j])
    }))
}

/// Solves for the w-vector of a face. The empty cone's w-vector is the
/// origin.
pub fn w_vector(fan: &Fan, ip: &InnerProduct, z: &ZValue, cone: &Cone) -> Result<WVector, NormalError> {
    check_ip(fan, ip)?;
    check_face(fan, cone)?;
    if cone.is_empty() {
        return Ok(WVector {
            cone: cone.clone(),
            point: RatVector::zeros(fan.ambient_dim()),
            coeffs: BTreeMap::new(),
        });
    }
    let g = gram(fan, ip, cone)?;
    let rhs = z.restrict(cone)?;
    let a = g.solve(&rhs)?;
    let mut point = RatVector::zeros(fan.ambient_dim());
    let mut coeffs = BTreeMap::new();
    for (i, id) in cone.rays().enumerate() {
        point = point.add(&fan.ray_vector(id).expect("ray exists").scale(&a[i]));
        coeffs.insert(id.clone(), a[i].clone());
    }
    Ok(WVector {
        cone: cone.clone(),
        point,
        coeffs,
    })
}

struct WCache<'a> {
    fan: &'a Fan,
    ip: &'a InnerProduct,
    z: &'a ZValue,
    cache: BTreeMap<Cone, WVector>,
}

impl<'a> WCache<'a> {
    fn new(fan: &'a Fan, ip: &'a InnerProduct, z: &'a ZValue) -> Self {
        WCache {
            fan,
            ip,
            z,
            cache: BTreeMap::new(),
        }
    }

    fn get(&mut self, cone: &Cone) -> Result<&WVector, NormalError> {
        if !self.cache.contains_key(cone) {
            let w = w_vector(self.fan, self.ip, self.z, cone)?;
            self.cache.insert(cone.clone(), w);
        }
        Ok(&self.cache[cone])
    }
}

fn classify_cones(
    fan: &Fan,
    ip: &InnerProduct,
    z: &ZValue,
    cones: &[Cone],
) -> Result<Cubicality, NormalError> {
    check_ip(fan, ip)?;
    check_z_total(fan, z)?;
    let mut wcache = WCache::new(fan, ip, z);
    let mut tight: BTreeSet<(Cone, RayId)> = BTreeSet::new();
    for sigma in cones {
        for tau in sigma.all_faces() {
            let w_point = wcache.get(&tau)?.point.clone();
            for rho in sigma.rays() {
                if tau.contains(rho) {
                    continue;
                }
                let lhs = ip.pair(fan.ray_vector(rho).expect("ray exists"), &w_point);
                let z_rho = z.require(rho)?;
                match lhs.cmp(z_rho) {
                    std::cmp::Ordering::Greater => {
                        return Ok(Cubicality::Neither {
                            tau,
                            rho: rho.clone(),
                        });
                    }
                    std::cmp::Ordering::Equal => {
                        tight.insert((tau.clone(), rho.clone()));
                    }
                    std::cmp::Ordering::Less => {}
                }
            }
        }
    }
    if tight.is_empty() {
        Ok(Cubicality::Cubical)
    } else {
        Ok(Cubicality::PseudoCubical {
            tight: tight.into_iter().collect(),
        })
    }
}

/// Classifies `z` against every maximal cone of the fan.
pub fn is_cubical(fan: &Fan, ip: &InnerProduct, z: &ZValue) -> Result<Cubicality, NormalError> {
    classify_cones(fan, ip, z, fan.max_cones())
}

/// Classifies `z` against a single cone of the fan.
pub fn is_cubical_for_cone(
    fan: &Fan,
    ip: &InnerProduct,
    z: &ZValue,
    cone: &Cone,
) -> Result<Cubicality, NormalError> {
    check_face(fan, cone)?;
    classify_cones(fan, ip, z, std::slice::from_ref(cone))
}

fn require_pseudo_cubical(
    fan: &Fan,
    ip: &InnerProduct,
    z: &ZValue,
    cone: &Cone,
) -> Result<(), NormalError> {
    match is_cubical_for_cone(fan, ip, z, cone)? {
        Cubicality::Neither { tau, rho } => Err(NormalError::NotPseudoCubical {
            cone: cone.clone(),
            tau,
            rho,
        }),
        _ => Ok(()),
    }
}

/// One defining inequality of the cubicality cone: the linear form (in the
/// z-variables) `z_ρ − u_ρ * w_τ(z)`, required positive (strict) for
/// cubical values and nonnegative for pseudo-cubical ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubicalInequality {
    pub tau: Cone,
    pub rho: RayId,
    /// Coefficients of the form, keyed by ray id; absent keys are zero.
    pub form: BTreeMap<RayId, Rat>,
    pub strict: bool,
}

impl CubicalInequality {
    pub fn evaluate(&self, z: &ZValue) -> Result<Rat, NormalError> {
        let mut acc = Rat::zero();
        for (id, c) in &self.form {
            acc += &(c * z.require(id)?);
        }
        Ok(acc)
    }
}

/// The cubicality cone of a fan and inner product: the set of truncation
/// vectors cutting every maximal cone into a combinatorial cube, described
/// by homogeneous linear inequalities in z.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubicalCone {
    pub inequalities: Vec<CubicalInequality>,
}

impl CubicalCone {
    /// Evaluates the inequality system on a concrete z; agrees with
    /// [`is_cubical`] by construction (and by test).
    pub fn classify(&self, z: &ZValue) -> Result<Cubicality, NormalError> {
        let mut tight = Vec::new();
        for ineq in &self.inequalities {
            let v = ineq.evaluate(z)?;
            if v.is_negative() {
                return Ok(Cubicality::Neither {
                    tau: ineq.tau.clone(),
                    rho: ineq.rho.clone(),
                });
            }
            if v.is_zero() {
                tight.push((ineq.tau.clone(), ineq.rho.clone()));
            }
        }
        if tight.is_empty() {
            Ok(Cubicality::Cubical)
        } else {
            Ok(Cubicality::PseudoCubical { tight })
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct IneqFile<'a> {
            tau: Vec<&'a RayId>,
            rho: &'a RayId,
            form: &'a BTreeMap<RayId, Rat>,
            strict: bool,
        }
        let rows: Vec<IneqFile<'_>> = self
            .inequalities
            .iter()
            .map(|i| IneqFile {
                tau: i.tau.rays().collect(),
                rho: &i.rho,
                form: &i.form,
                strict: i.strict,
            })
            .collect();
        serde_json::to_string_pretty(&rows).expect("inequalities serialize")
    }
}

/// Derives the symbolic inequality system cutting out the cubicality cone.
///
/// For a pair (τ, ρ) the value `u_ρ * w_τ(z)` is linear in z: writing
/// `G_τ a = z|_τ` and `p_η = u_ρ * u_η`, it equals `c · z|_τ` with
/// `c = G_τ⁻¹ p` (G is symmetric). Each inequality is stored as the form
/// `z_ρ − c · z|_τ`.
pub fn cubical_cone(fan: &Fan, ip: &InnerProduct) -> Result<CubicalCone, NormalError> {
    check_ip(fan, ip)?;
    let mut pairs: BTreeSet<(Cone, RayId)> = BTreeSet::new();
    for sigma in fan.max_cones() {
        for tau in sigma.all_faces() {
            for rho in sigma.rays() {
                if !tau.contains(rho) {
                    pairs.insert((tau.clone(), rho.clone()));
                }
            }
        }
    }

    let mut inequalities = Vec::with_capacity(pairs.len());
    for (tau, rho) in pairs {
        let mut form: BTreeMap<RayId, Rat> = BTreeMap::new();
        form.insert(rho.clone(), Rat::one());
        if !tau.is_empty() {
            let g = gram(fan, ip, &tau)?;
            let u_rho = fan.ray_vector(&rho).expect("ray exists");
            let pairings = RatVector::new(
                tau.rays()
                    .map(|eta| ip.pair(u_rho, fan.ray_vector(eta).expect("ray exists")))
                    .collect(),
            );
            let c = g.solve(&pairings)?;
            for (i, eta) in tau.rays().enumerate() {
                if !c[i].is_zero() {
                    let e = form.entry(eta.clone()).or_insert_with(Rat::zero);
                    *e -= &c[i];
                    if e.is_zero() {
                        form.remove(eta);
                    }
                }
            }
        }
        inequalities.push(CubicalInequality {
            tau,
            rho,
            form,
            strict: true,
        });
    }
    Ok(CubicalCone { inequalities })
}

/// The vertex set of the truncation polytope of a cone: the w-vectors of
/// all its faces, deduplicated by exact coordinates. Requires z to be
/// pseudo-cubical on the cone.
pub fn polytope_vertices(
    fan: &Fan,
    ip: &InnerProduct,
    z: &ZValue,
    cone: &Cone,
) -> Result<BTreeSet<RatVector>, NormalError> {
    require_pseudo_cubical(fan, ip, z, cone)?;
    let mut vertices = BTreeSet::new();
    for tau in cone.all_faces() {
        vertices.insert(w_vector(fan, ip, z, &tau)?.point);
    }
    Ok(vertices)
}

/// One simplex of the labeled triangulation: the convex hull of the origin
/// and the w-vectors of the labeling's prefix faces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSimplex {
    pub cone: Cone,
    /// The ordering f(1), …, f(k) of the cone's rays.
    pub labeling: Vec<RayId>,
    /// k+1 vertices; the first is the origin (w of the empty face).
    pub vertices: Vec<RatVector>,
    /// True when the simplex is lower-dimensional (some prefix w-vector
    /// leaves the coefficient of its newest ray at zero).
    pub degenerate: bool,
}

/// All k! labeled simplices of a cone's truncation polytope, in
/// lexicographic order of the labeling. Requires z pseudo-cubical on the
/// cone; for strictly cubical z every simplex is full-dimensional and for
/// pseudo-cubical z degenerate ones are flagged.
pub fn triangulate(
    fan: &Fan,
    ip: &InnerProduct,
    z: &ZValue,
    cone: &Cone,
) -> Result<Vec<LabeledSimplex>, NormalError> {
    require_pseudo_cubical(fan, ip, z, cone)?;
    let mut wcache = WCache::new(fan, ip, z);
    let ids: Vec<&RayId> = cone.rays().collect();
    let k = ids.len();
    let mut simplices = Vec::new();
    for perm in ids.iter().permutations(k) {
        let mut vertices = vec![RatVector::zeros(fan.ambient_dim())];
        let mut degenerate = false;
        let mut prefix = Cone::empty();
        for id in &perm {
            prefix = prefix.with(id);
            let w = wcache.get(&prefix)?;
            if w.coeffs[**id].is_zero() {
                degenerate = true;
            }
            vertices.push(w.point.clone());
        }
        simplices.push(LabeledSimplex {
            cone: cone.clone(),
            labeling: perm.into_iter().map(|id| (*id).clone()).collect(),
            vertices,
            degenerate,
        });
    }
    Ok(simplices)
}

/// Memo shared by the closed-form volume recurrences: Gram determinants and
/// labeling sums per face cone.
pub(crate) struct VolumeMemo {
    dets: BTreeMap<Cone, Rat>,
    sums: BTreeMap<Cone, Rat>,
}

impl VolumeMemo {
    pub(crate) fn new() -> Self {
        VolumeMemo {
            dets: BTreeMap::new(),
            sums: BTreeMap::new(),
        }
    }
}

pub(crate) fn gram_det(
    fan: &Fan,
    ip: &InnerProduct,
    cone: &Cone,
    memo: &mut VolumeMemo,
) -> Result<Rat, NormalError> {
    if let Some(d) = memo.dets.get(cone) {
        return Ok(d.clone());
    }
    let d = gram(fan, ip, cone)?.det()?;
    memo.dets.insert(cone.clone(), d.clone());
    Ok(d)
}

/// The labeling sum `Σ_f Π_j det(G_{S_j, f(j)}(z_j)) / det(G_{S_j})`, where
/// f runs over all orderings of the cone's rays, `S_j` is the j-th prefix
/// face, `G_{S,ρ}(z)` is the Gram matrix with ρ's column replaced by the
/// z-values of S, and slot j uses `zs[j-1]`. Computed by the subset
/// recurrence `g(S) = Σ_ρ (det(G_{S,ρ}(z_{|S|})) / det(G_S)) · g(S∖ρ)`.
pub(crate) fn labeling_sum(
    fan: &Fan,
    ip: &InnerProduct,
    zs: &[&ZValue],
    cone: &Cone,
    memo: &mut VolumeMemo,
) -> Result<Rat, NormalError> {
    if let Some(v) = memo.sums.get(cone) {
        return Ok(v.clone());
    }
    if cone.is_empty() {
        return Ok(Rat::one());
    }
    let size = cone.len();
    assert!(zs.len() >= size, "one z per labeling slot");
    let z = zs[size - 1];

    let g = gram(fan, ip, cone)?;
    let det_g = gram_det(fan, ip, cone, memo)?;
    if det_g.is_zero() {
        return Err(NormalError::Arith(ArithError::Singular));
    }
    let rhs = z.restrict(cone)?;
    let mut total = Rat::zero();
    for (col, rho) in cone.rays().enumerate() {
        let numer = g.replace_col(col, &rhs).det()?;
        if numer.is_zero() {
            continue;
        }
        let sub = labeling_sum(fan, ip, zs, &cone.without(rho), memo)?;
        total += &((numer / &det_g) * sub);
    }
    memo.sums.insert(cone.clone(), total.clone());
    Ok(total)
}

/// Exact volume of the truncation polytope of one cone:
/// `det(G_σ) · Σ_f Π_j det(G_{σ(f,j), f(j)}(z)) / det(G_{σ(f,j)})`.
pub fn cone_volume(
    fan: &Fan,
    ip: &InnerProduct,
    z: &ZValue,
    cone: &Cone,
) -> Result<Rat, NormalError> {
    require_pseudo_cubical(fan, ip, z, cone)?;
    let mut memo = VolumeMemo::new();
    cone_volume_with_memo(fan, ip, z, cone, &mut memo)
}

fn cone_volume_with_memo(
    fan: &Fan,
    ip: &InnerProduct,
    z: &ZValue,
    cone: &Cone,
    memo: &mut VolumeMemo,
) -> Result<Rat, NormalError> {
    let zs: Vec<&ZValue> = vec![z; cone.len()];
    let sum = labeling_sum(fan, ip, &zs, cone, memo)?;
    Ok(gram_det(fan, ip, cone, memo)? * sum)
}

/// Exact volume of the whole normal complex: the weighted sum of the cone
/// volumes over all maximal cones. Pseudo-cubicality is checked per cone
/// and shared faces are computed once.
pub fn complex_volume(
    fan: &Fan,
    weights: &WeightFunction,
    ip: &InnerProduct,
    z: &ZValue,
) -> Result<Rat, NormalError> {
    check_ip(fan, ip)?;
    check_z_total(fan, z)?;
    let mut memo = VolumeMemo::new();
    let mut total = Rat::zero();
    for sigma in fan.max_cones() {
        require_pseudo_cubical(fan, ip, z, sigma)?;
        let w = weights.get(sigma)?;
        total += &(w * cone_volume_with_memo(fan, ip, z, sigma, &mut memo)?);
    }
    Ok(total)
}

/// Independent exact volume via the labeled triangulation: for each
/// labeling, the matrix T_f of prefix w-vector coefficients (rows indexed
/// by labeling position, columns by the cone's rays) contributes
/// `det(G_σ) · |det T_f|`. Vertex coefficients come from linear solves, not
/// from the closed-form determinant ratios, so this cross-checks
/// [`cone_volume`] along a different route.
pub fn volume_oracle_triangulation(
    fan: &Fan,
    ip: &InnerProduct,
    z: &ZValue,
    cone: &Cone,
) -> Result<Rat, NormalError> {
    require_pseudo_cubical(fan, ip, z, cone)?;
    let ids: Vec<&RayId> = cone.rays().collect();
    let k = ids.len();
    let mut memo = VolumeMemo::new();
    let det_g = gram_det(fan, ip, cone, &mut memo)?;
    if k == 0 {
        return Ok(det_g);
    }
    let mut wcache = WCache::new(fan, ip, z);
    let mut total = Rat::zero();
    for perm in ids.iter().permutations(k) {
        let mut rows = Vec::with_capacity(k);
        let mut prefix = Cone::empty();
        for id in &perm {
            prefix = prefix.with(id);
            let w = wcache.get(&prefix)?;
            rows.push(RatVector::new(
                ids.iter()
                    .map(|col| w.coeffs.get(*col).cloned().unwrap_or_else(Rat::zero))
                    .collect(),
            ));
        }
        let t = RatMatrix::from_rows(rows)?;
        total += &t.det()?.abs();
    }
    Ok(det_g * total)
}

/// Monte Carlo volume estimate and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub hits: u64,
}

/// Monte Carlo volume of one cone's truncation polytope: rejection sampling
/// in orthonormal coordinates for the inner product (obtained from a
/// floating-point Cholesky factor of the exact Gram matrix). This is the
/// only approximate path in the crate; everything else stays rational.
pub fn volume_oracle_montecarlo(
    fan: &Fan,
    ip: &InnerProduct,
    z: &ZValue,
    cone: &Cone,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, NormalError> {
    require_pseudo_cubical(fan, ip, z, cone)?;
    let k = cone.len();
    if k == 0 {
        // The polytope is the single point at the origin; its 0-dimensional
        // volume is 1 and the estimate is exact.
        return Ok(McEstimate {
            estimate: 1.0,
            stderr: 0.0,
            samples,
            hits: samples,
        });
    }

    let g = gram(fan, ip, cone)?;
    let det_g = g.det()?.to_f64();
    let gf: Vec<Vec<f64>> = g.to_f64_rows();
    let l = cholesky(&gf);

    // Vertex coefficient vectors, then their orthonormal images y = Lᵀ a.
    let mut ys = Vec::new();
    for tau in cone.all_faces() {
        let w = w_vector(fan, ip, z, &tau)?;
        let a: Vec<f64> = cone
            .rays()
            .map(|id| w.coeffs.get(id).map_or(0.0, Rat::to_f64))
            .collect();
        ys.push(mul_lt(&l, &a));
    }
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    for y in &ys {
        for i in 0..k {
            lo[i] = lo[i].min(y[i]);
            hi[i] = hi[i].max(y[i]);
        }
    }
    let widths: Vec<f64> = (0..k).map(|i| hi[i] - lo[i]).collect();
    let box_vol: f64 = widths.iter().product();
    if box_vol <= 0.0 {
        // Degenerate bounding box: the polytope has zero k-volume.
        return Ok(McEstimate {
            estimate: 0.0,
            stderr: 0.0,
            samples,
            hits: 0,
        });
    }

    let zf: Vec<f64> = cone
        .rays()
        .map(|id| z.get(id).expect("z is total").to_f64())
        .collect();
    let mut rng = SplitMix64::new(seed);
    let mut hits: u64 = 0;
    let mut y = vec![0.0; k];
    for _ in 0..samples {
        for i in 0..k {
            y[i] = lo[i] + rng.next_f64() * widths[i];
        }
        let a = solve_lt(&l, &y);
        let inside = a.iter().all(|&c| c >= 0.0)
            && (0..k).all(|r| {
                let dot: f64 = (0..k).map(|c| gf[r][c] * a[c]).sum();
                dot <= zf[r]
            });
        if inside {
            hits += 1;
        }
    }

    let p = hits as f64 / samples as f64;
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    let scale = det_g.sqrt() * factorial * box_vol;
    Ok(McEstimate {
        estimate: scale * p,
        stderr: scale * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        hits,
    })
}

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// matrix, G = L Lᵀ.
fn cholesky(g: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = g.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][j] = (g[i][i] - s).max(0.0).sqrt();
            } else {
                l[i][j] = (g[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

/// y = Lᵀ a for lower-triangular L.
fn mul_lt(l: &[Vec<f64>], a: &[f64]) -> Vec<f64> {
    let n = l.len();
    (0..n)
        .map(|i| (i..n).map(|j| l[j][i] * a[j]).sum())
        .collect()
}

/// Solves Lᵀ a = y by back substitution.
fn solve_lt(l: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut a = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| l[j][i] * a[j]).sum();
        a[i] = (y[i] - s) / l[i][i];
    }
    a
}

/// Diagnostic: for each maximal cone, whether all of its polytope vertices
/// also satisfy the truncation inequalities of every ray *outside* the
/// cone. When this holds for all cones, the per-cone polytopes agree with
/// the global truncation of the fan's support. Purely informational — no
/// operation enforces it.
pub fn global_containment(
    fan: &Fan,
    ip: &InnerProduct,
    z: &ZValue,
) -> Result<BTreeMap<Cone, bool>, NormalError> {
    check_ip(fan, ip)?;
    check_z_total(fan, z)?;
    let mut out = BTreeMap::new();
    for sigma in fan.max_cones() {
        let mut ok = true;
        'faces: for tau in sigma.all_faces() {
            let w = w_vector(fan, ip, z, &tau)?;
            for (id, u) in fan.rays() {
                if sigma.contains(id) {
                    continue;
                }
                if &ip.pair(u, &w.point) > z.require(id)? {
                    ok = false;
                    break 'faces;
                }
            }
        }
        out.insert(sigma.clone(), ok);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;

    fn dot2() -> InnerProduct {
        InnerProduct::standard_dot(2)
    }

    fn quadrant_cone() -> Cone {
        Cone::from_ids(["1", "2"])
    }

    #[test]
    fn inner_product_construction_validates() {
        assert!(InnerProduct::new(RatMatrix::from_int_rows(&[&[2, 1], &[1, 2]])).is_ok());
        assert!(matches!(
            InnerProduct::new(RatMatrix::from_int_rows(&[&[1, 2], &[3, 4]])),
            Err(NormalError::NotSymmetric)
        ));
        assert!(matches!(
            InnerProduct::new(RatMatrix::from_int_rows(&[&[1, 2], &[2, 1]])),
            Err(NormalError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn inner_product_json_round_trip() {
        let ip = skew_inner_product();
        let text = ip.to_json();
        assert_eq!(InnerProduct::from_json(&text).unwrap(), ip);
        assert!(InnerProduct::from_json(r#"{"matrix": [["1","2"],["2","1"]]}"#).is_err());
    }

    #[test]
    fn gram_matrices_under_both_products() {
        let fan = first_quadrant();
        let cone = quadrant_cone();
        assert_eq!(gram(&fan, &dot2(), &cone).unwrap(), RatMatrix::identity(2));
        assert_eq!(
            gram(&fan, &skew_inner_product(), &cone).unwrap(),
            RatMatrix::from_int_rows(&[&[4, 1], &[1, 2]])
        );
        let sub = Cone::from_ids(["2"]);
        assert_eq!(
            gram(&fan, &skew_inner_product(), &sub).unwrap(),
            RatMatrix::from_int_rows(&[&[2]])
        );
    }

    #[test]
    fn gram_rejects_foreign_cones_and_mismatched_products() {
        let fan = first_quadrant();
        assert!(matches!(
            gram(&fan, &dot2(), &Cone::from_ids(["nope"])),
            Err(NormalError::UnknownCone { .. })
        ));
        assert!(matches!(
            gram(&fan, &InnerProduct::standard_dot(3), &quadrant_cone()),
            Err(NormalError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn w_vector_on_a_single_ray() {
        // For τ = {ρ}, w = (z_ρ / u_ρ*u_ρ) u_ρ.
        let fan = first_quadrant();
        let z = quadrant_z22();
        let w = w_vector(&fan, &skew_inner_product(), &z, &Cone::from_ids(["1"])).unwrap();
        assert_eq!(w.point, RatVector::new(vec![Rat::frac(1, 2), Rat::zero()]));
        assert_eq!(w.coeffs["1"], Rat::frac(1, 2));
    }

    #[test]
    fn w_vector_of_full_quadrant_under_skew_product() {
        let fan = first_quadrant();
        let z = quadrant_z22();
        let w = w_vector(&fan, &skew_inner_product(), &z, &quadrant_cone()).unwrap();
        assert_eq!(
            w.point,
            RatVector::new(vec![Rat::frac(2, 7), Rat::frac(6, 7)])
        );
        assert_eq!(w.coeffs["1"], Rat::frac(2, 7));
        assert_eq!(w.coeffs["2"], Rat::frac(6, 7));
    }

    #[test]
    fn w_vector_of_empty_face_is_origin() {
        let fan = first_quadrant();
        let w = w_vector(&fan, &dot2(), &quadrant_z22(), &Cone::empty()).unwrap();
        assert!(w.point.is_zero());
        assert!(w.coeffs.is_empty());
    }

    #[test]
    fn dot_product_w_vector_matches_coordinates() {
        let fan = first_quadrant();
        let w = w_vector(&fan, &dot2(), &quadrant_z22(), &quadrant_cone()).unwrap();
        assert_eq!(w.point, RatVector::from_ints(&[2, 2]));
    }

    #[test]
    fn quadrant_z22_is_cubical_both_ways() {
        let fan = first_quadrant();
        let z = quadrant_z22();
        assert_eq!(is_cubical(&fan, &dot2(), &z).unwrap(), Cubicality::Cubical);
        assert_eq!(
            is_cubical(&fan, &skew_inner_product(), &z).unwrap(),
            Cubicality::Cubical
        );
    }

    #[test]
    fn zero_z_is_pseudo_cubical() {
        let fan = first_quadrant();
        let z = ZValue::zero_for(&fan);
        let verdict = is_cubical(&fan, &dot2(), &z).unwrap();
        assert!(matches!(verdict, Cubicality::PseudoCubical { .. }));
        assert!(verdict.is_pseudo_cubical());
        assert!(!verdict.is_cubical());
    }

    #[test]
    fn lopsided_z_is_neither() {
        // On cone((1,0), (1,1)) with the dot product, z = (1, 3) pushes the
        // w-vector of the full cone outside: its first coefficient is
        // 2z_1 − z_2 = −1.
        let rays = BTreeMap::from([
            ("a".to_string(), RatVector::from_ints(&[1, 0])),
            ("b".to_string(), RatVector::from_ints(&[1, 1])),
        ]);
        let fan = Fan::new(2, rays, vec![Cone::from_ids(["a", "b"])]).unwrap();
        let z = ZValue::from_pairs([("a", Rat::one()), ("b", Rat::from_int(3))]);
        let verdict = is_cubical(&fan, &dot2(), &z).unwrap();
        assert!(matches!(verdict, Cubicality::Neither { .. }));
    }

    #[test]
    fn hexagon_and_balanced_r3_cut_values_are_cubical() {
        let hex = hexagon_fan();
        assert_eq!(
            is_cubical(&hex, &dot2(), &hexagon_cut_z()).unwrap(),
            Cubicality::Cubical
        );
        let fan = balanced_r3_fan();
        assert_eq!(
            is_cubical(&fan, &InnerProduct::standard_dot(3), &balanced_r3_cut_z()).unwrap(),
            Cubicality::Cubical
        );
    }

    #[test]
    fn chain_cone_z_is_pseudo_cubical_with_tight_pairs() {
        let fan = chain_cone();
        let verdict = is_cubical(&fan, &InnerProduct::standard_dot(3), &chain_z123()).unwrap();
        match verdict {
            Cubicality::PseudoCubical { tight } => assert!(!tight.is_empty()),
            other => panic!("expected pseudo-cubical, got {other:?}"),
        }
    }

    #[test]
    fn missing_z_entries_are_reported() {
        let fan = first_quadrant();
        let z = ZValue::from_pairs([("1", Rat::one())]);
        assert!(matches!(
            is_cubical(&fan, &dot2(), &z),
            Err(NormalError::MissingZ { .. })
        ));
    }

    #[test]
    fn cubical_cone_of_quadrant_under_dot_is_coordinate_positivity() {
        let fan = first_quadrant();
        let cc = cubical_cone(&fan, &dot2()).unwrap();
        // Pairs: (∅, 1), (∅, 2), ({1}, 2), ({2}, 1). Under the dot product
        // the generators are orthogonal, so each form is just z_ρ.
        assert_eq!(cc.inequalities.len(), 4);
        for ineq in &cc.inequalities {
            assert!(ineq.strict);
            assert_eq!(ineq.form.len(), 1);
            assert_eq!(ineq.form[&ineq.rho], Rat::one());
        }
    }

    #[test]
    fn cubical_cone_classification_agrees_with_direct_test() {
        let fans = [
            (first_quadrant(), dot2()),
            (first_quadrant(), skew_inner_product()),
            (hexagon_fan(), dot2()),
        ];
        for (fan, ip) in &fans {
            let cc = cubical_cone(fan, ip).unwrap();
            let mut rng = crate::rng::SplitMix64::new(0xCC);
            for _ in 0..100 {
                let z = ZValue::new(
                    fan.rays()
                        .keys()
                        .map(|id| {
                            (id.clone(), Rat::frac(rng.next_int(-4, 8), rng.next_int(1, 3)))
                        })
                        .collect(),
                );
                let direct = is_cubical(fan, ip, &z).unwrap();
                let via_forms = cc.classify(&z).unwrap();
                // Witnesses may differ; the classification may not.
                assert_eq!(
                    std::mem::discriminant(&direct),
                    std::mem::discriminant(&via_forms),
                    "direct {direct:?} vs forms {via_forms:?} at z = {z:?}"
                );
            }
        }
    }

    #[test]
    fn quadrant_vertices_form_a_square() {
        let fan = first_quadrant();
        let verts = polytope_vertices(&fan, &dot2(), &quadrant_z22(), &quadrant_cone()).unwrap();
        let expected: BTreeSet<RatVector> = [
            RatVector::from_ints(&[0, 0]),
            RatVector::from_ints(&[2, 0]),
            RatVector::from_ints(&[0, 2]),
            RatVector::from_ints(&[2, 2]),
        ]
        .into_iter()
        .collect();
        assert_eq!(verts, expected);
    }

    #[test]
    fn zero_z_collapses_vertices_to_origin() {
        let fan = first_quadrant();
        let z = ZValue::zero_for(&fan);
        let verts = polytope_vertices(&fan, &dot2(), &z, &quadrant_cone()).unwrap();
        assert_eq!(verts.len(), 1);
    }

    #[test]
    fn chain_cone_vertices_are_the_generators() {
        let fan = chain_cone();
        let cone = Cone::from_ids(["a", "b", "c"]);
        let verts =
            polytope_vertices(&fan, &InnerProduct::standard_dot(3), &chain_z123(), &cone).unwrap();
        let expected: BTreeSet<RatVector> = [
            RatVector::zeros(3),
            RatVector::from_ints(&[1, 0, 0]),
            RatVector::from_ints(&[1, 1, 0]),
            RatVector::from_ints(&[1, 1, 1]),
        ]
        .into_iter()
        .collect();
        assert_eq!(verts, expected);
    }

    #[test]
    fn vertices_require_pseudo_cubical_values() {
        let rays = BTreeMap::from([
            ("a".to_string(), RatVector::from_ints(&[1, 0])),
            ("b".to_string(), RatVector::from_ints(&[1, 1])),
        ]);
        let fan = Fan::new(2, rays, vec![Cone::from_ids(["a", "b"])]).unwrap();
        let z = ZValue::from_pairs([("a", Rat::one()), ("b", Rat::from_int(3))]);
        assert!(matches!(
            polytope_vertices(&fan, &dot2(), &z, &Cone::from_ids(["a", "b"])),
            Err(NormalError::NotPseudoCubical { .. })
        ));
    }

    #[test]
    fn octant_triangulation_has_six_full_simplices() {
        let fan = octant_cone();
        let cone = Cone::from_ids(["e1", "e2", "e3"]);
        let simplices =
            triangulate(&fan, &InnerProduct::standard_dot(3), &octant_unit_z(), &cone).unwrap();
        assert_eq!(simplices.len(), 6);
        assert!(simplices.iter().all(|s| !s.degenerate));
        assert!(simplices.iter().all(|s| s.vertices.len() == 4));
        assert!(simplices.iter().all(|s| s.vertices[0].is_zero()));
        // Labelings are pairwise distinct and lexicographically ordered.
        let labelings: Vec<_> = simplices.iter().map(|s| s.labeling.clone()).collect();
        let mut sorted = labelings.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(labelings, sorted);
    }

    #[test]
    fn chain_cone_triangulation_degenerates_to_one_simplex() {
        let fan = chain_cone();
        let cone = Cone::from_ids(["a", "b", "c"]);
        let simplices =
            triangulate(&fan, &InnerProduct::standard_dot(3), &chain_z123(), &cone).unwrap();
        assert_eq!(simplices.len(), 6);
        let full: Vec<_> = simplices.iter().filter(|s| !s.degenerate).collect();
        assert_eq!(full.len(), 1);
        assert_eq!(full[0].labeling, vec!["a", "b", "c"]);
    }

    #[test]
    fn quadrant_volume_dot_and_skew() {
        let fan = first_quadrant();
        let z = quadrant_z22();
        let cone = quadrant_cone();
        assert_eq!(
            cone_volume(&fan, &dot2(), &z, &cone).unwrap(),
            Rat::from_int(8)
        );
        assert_eq!(
            cone_volume(&fan, &skew_inner_product(), &z, &cone).unwrap(),
            Rat::from_int(5)
        );
        let zero = ZValue::zero_for(&fan);
        assert_eq!(
            cone_volume(&fan, &dot2(), &zero, &cone).unwrap(),
            Rat::zero()
        );
    }

    #[test]
    fn chain_cone_volume_is_one() {
        let fan = chain_cone();
        let cone = Cone::from_ids(["a", "b", "c"]);
        assert_eq!(
            cone_volume(&fan, &InnerProduct::standard_dot(3), &chain_z123(), &cone).unwrap(),
            Rat::one()
        );
    }

    #[test]
    fn octant_unit_cube_volume_is_six() {
        let fan = octant_cone();
        let cone = Cone::from_ids(["e1", "e2", "e3"]);
        assert_eq!(
            cone_volume(&fan, &InnerProduct::standard_dot(3), &octant_unit_z(), &cone).unwrap(),
            Rat::from_int(6)
        );
    }

    #[test]
    fn hexagon_complex_volume_matches_closed_form() {
        // Twice the exact shoelace area of the hexagon with these support
        // values: 2 · 131/8.
        let fan = hexagon_fan();
        let total = complex_volume(&fan, &WeightFunction::ones(&fan), &dot2(), &hexagon_cut_z())
            .unwrap();
        assert_eq!(total, Rat::frac(131, 4));
    }

    #[test]
    fn complex_volume_reports_offending_cone() {
        let rays = BTreeMap::from([
            ("a".to_string(), RatVector::from_ints(&[1, 0])),
            ("b".to_string(), RatVector::from_ints(&[1, 1])),
            ("c".to_string(), RatVector::from_ints(&[0, 1])),
        ]);
        let fan = Fan::new(
            2,
            rays,
            vec![Cone::from_ids(["a", "b"]), Cone::from_ids(["b", "c"])],
        )
        .unwrap();
        let z = ZValue::from_pairs([
            ("a", Rat::one()),
            ("b", Rat::from_int(3)),
            ("c", Rat::one()),
        ]);
        match complex_volume(&fan, &WeightFunction::ones(&fan), &dot2(), &z) {
            Err(NormalError::NotPseudoCubical { cone, .. }) => {
                assert_eq!(cone, Cone::from_ids(["a", "b"]));
            }
            other => panic!("expected NotPseudoCubical, got {other:?}"),
        }
    }

    #[test]
    fn triangulation_oracle_agrees_exactly() {
        let quadrant = first_quadrant();
        let qcone = quadrant_cone();
        for ip in [dot2(), skew_inner_product()] {
            let direct = cone_volume(&quadrant, &ip, &quadrant_z22(), &qcone).unwrap();
            let oracle =
                volume_oracle_triangulation(&quadrant, &ip, &quadrant_z22(), &qcone).unwrap();
            assert_eq!(direct, oracle);
        }

        let chain = chain_cone();
        let ccone = Cone::from_ids(["a", "b", "c"]);
        assert_eq!(
            volume_oracle_triangulation(
                &chain,
                &InnerProduct::standard_dot(3),
                &chain_z123(),
                &ccone
            )
            .unwrap(),
            Rat::one()
        );

        let hex = hexagon_fan();
        let z = hexagon_cut_z();
        let mut total = Rat::zero();
        for sigma in hex.max_cones() {
            total += &volume_oracle_triangulation(&hex, &dot2(), &z, sigma).unwrap();
        }
        assert_eq!(total, Rat::frac(131, 4));
    }

    #[test]
    fn monte_carlo_square_is_exact_within_error() {
        let fan = first_quadrant();
        let est = volume_oracle_montecarlo(&fan, &dot2(), &quadrant_z22(), &quadrant_cone(), 20_000, 7)
            .unwrap();
        // The bounding box equals the square, so every sample hits.
        assert_eq!(est.hits, est.samples);
        assert!((est.estimate - 8.0).abs() < 1e-9);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn monte_carlo_skew_product_brackets_exact_value() {
        let fan = first_quadrant();
        let est = volume_oracle_montecarlo(
            &fan,
            &skew_inner_product(),
            &quadrant_z22(),
            &quadrant_cone(),
            100_000,
            12345,
        )
        .unwrap();
        assert!(est.stderr > 0.0);
        assert!(
            (est.estimate - 5.0).abs() <= 4.0 * est.stderr,
            "estimate {} ± {} too far from 5",
            est.estimate,
            est.stderr
        );
    }

    #[test]
    fn monte_carlo_zero_z_is_exactly_zero() {
        let fan = first_quadrant();
        let z = ZValue::zero_for(&fan);
        let est =
            volume_oracle_montecarlo(&fan, &dot2(), &z, &quadrant_cone(), 1000, 99).unwrap();
        assert_eq!(est.estimate, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn monte_carlo_is_deterministic_per_seed() {
        let fan = first_quadrant();
        let ip = skew_inner_product();
        let z = quadrant_z22();
        let a = volume_oracle_montecarlo(&fan, &ip, &z, &quadrant_cone(), 10_000, 42).unwrap();
        let b = volume_oracle_montecarlo(&fan, &ip, &z, &quadrant_cone(), 10_000, 42).unwrap();
        assert_eq!(a, b);
        let c = volume_oracle_montecarlo(&fan, &ip, &z, &quadrant_cone(), 10_000, 43).unwrap();
        assert_ne!(a.hits, c.hits);
    }

    #[test]
    fn global_containment_diagnostic_on_hexagon() {
        let fan = hexagon_fan();
        let result = global_containment(&fan, &dot2(), &hexagon_cut_z()).unwrap();
        assert_eq!(result.len(), 6);
        assert!(result.values().all(|&ok| ok));
    }

    #[test]
    fn volume_requires_z_on_all_rays_of_the_fan() {
        let fan = hexagon_fan();
        let full = hexagon_cut_z();
        let partial = ZValue::new(
            full.iter()
                .filter(|(id, _)| id.as_str() != "02")
                .map(|(id, v)| (id.clone(), v.clone()))
                .collect(),
        );
        assert!(matches!(
            complex_volume(&fan, &WeightFunction::ones(&fan), &dot2(), &partial),
            Err(NormalError::MissingZ { .. })
        ));
    }
}
