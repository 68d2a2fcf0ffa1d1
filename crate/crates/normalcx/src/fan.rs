//! Marked simplicial fans.
//!
//! A fan here is a finite set of maximal cones in a common ambient space,
//! each cone given as a set of ray ids, together with one marked generator
//! vector per ray. Faces of a simplicial cone correspond to subsets of its
//! rays, so the whole face structure is combinatorial; only the marked
//! generators carry geometry. Validation checks the geometric fine print:
//! generators of each cone are linearly independent, all maximal cones have
//! equal dimension, and cones meet along common faces only.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::arith::{self, LpOutcome, Rat, RatMatrix, RatVector};

/// Rays are identified by opaque strings; the canonical order everywhere is
/// lexicographic on the id.
pub type RayId = String;

/// A cone of a simplicial fan, recorded as its set of ray ids.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cone(BTreeSet<RayId>);

impl Cone {
    pub fn empty() -> Self {
        Cone(BTreeSet::new())
    }

    pub fn from_ids<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Cone(ids.into_iter().map(Into::into).collect())
    }

    /// Ray ids in canonical (lexicographic) order.
    pub fn rays(&self) -> impl Iterator<Item = &RayId> + '_ {
        self.0.iter()
    }

    pub fn ray_set(&self) -> &BTreeSet<RayId> {
        &self.0
    }

    /// Number of rays; for a simplicial cone this is its dimension.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.contains(id)
    }

    pub fn is_face_of(&self, other: &Cone) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn intersection(&self, other: &Cone) -> Cone {
        Cone(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn without(&self, id: &RayId) -> Cone {
        let mut s = self.0.clone();
        s.remove(id);
        Cone(s)
    }

    pub fn with(&self, id: &RayId) -> Cone {
        let mut s = self.0.clone();
        s.insert(id.clone());
        Cone(s)
    }

    /// Comma-joined sorted ray ids; the empty cone's key is the empty string.
    pub fn key(&self) -> String {
        self.0.iter().join(",")
    }

    /// Faces of this cone of the given dimension, i.e. k-subsets of its rays.
    pub fn subcones(&self, k: usize) -> Vec<Cone> {
        self.0
            .iter()
            .combinations(k)
            .map(|c| Cone(c.into_iter().cloned().collect()))
            .collect()
    }

    /// All faces, the empty cone and the cone itself included, ordered by
    /// dimension then lexicographically.
    pub fn all_faces(&self) -> Vec<Cone> {
        (0..=self.len()).flat_map(|k| self.subcones(k)).collect()
    }
}

impl fmt::Debug for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.key())
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FanError {
    #[error("cone references unknown ray {id:?}")]
    UnknownRay { id: String },
    #[error("ray {id:?} has {found} coordinates, expected {expected}")]
    RayDimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("maximal cone <{key}> is listed more than once")]
    DuplicateMaxCone { key: String },
    #[error("cone listing repeats a ray: {key:?}")]
    RepeatedRayInCone { key: String },
    #[error("face dimension {k} exceeds fan dimension {d}")]
    BadDimension { k: usize, d: usize },
    #[error("no weight assigned to maximal cone <{key}>")]
    MissingWeight { key: String },
    #[error("weight of cone <{key}> must be strictly positive")]
    NonPositiveWeight { key: String },
    #[error("weight key <{key}> does not match any maximal cone")]
    UnknownWeightCone { key: String },
    #[error("malformed fan file: {0}")]
    Json(String),
}

/// Semantic problems found by [`Fan::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FanViolation {
    NoMaximalCones,
    ZeroRayGenerator { ray: RayId },
    DuplicateRays { first: RayId, second: RayId },
    NonSimplicialCone { cone: Cone, rank: usize },
    NonPureCone { cone: Cone, expected_dim: usize },
    ImproperIntersection { first: Cone, second: Cone, witness: RatVector },
}

impl fmt::Display for FanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FanViolation::NoMaximalCones => write!(f, "fan has no maximal cones"),
            FanViolation::ZeroRayGenerator { ray } => {
                write!(f, "ray {ray:?} has the zero vector as generator")
            }
            FanViolation::DuplicateRays { first, second } => write!(
                f,
                "rays {first:?} and {second:?} have positively proportional generators"
            ),
            FanViolation::NonSimplicialCone { cone, rank } => write!(
                f,
                "cone <{cone}> has {} rays but generator rank {rank}",
                cone.len()
            ),
            FanViolation::NonPureCone { cone, expected_dim } => write!(
                f,
                "maximal cone <{cone}> has dimension {} in a fan of dimension {expected_dim}",
                cone.len()
            ),
            FanViolation::ImproperIntersection { first, second, witness } => write!(
                f,
                "cones <{first}> and <{second}> overlap beyond their common face \
                 (witness point {witness:?})"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<FanViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(|v| v.to_string()).collect()
    }
}

/// A marked pure simplicial fan candidate. Construction performs structural
/// checks only (ids resolve, dimensions agree); geometric validity is the
/// business of [`Fan::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fan {
    ambient_dim: usize,
    rays: BTreeMap<RayId, RatVector>,
    max_cones: Vec<Cone>,
    dim: usize,
}

impl Fan {
    pub fn new(
        ambient_dim: usize,
        rays: BTreeMap<RayId, RatVector>,
        max_cones: Vec<Cone>,
    ) -> Result<Self, FanError> {
        for (id, v) in &rays {
            if v.dim() != ambient_dim {
                return Err(FanError::RayDimensionMismatch {
                    id: id.clone(),
                    expected: ambient_dim,
                    found: v.dim(),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for cone in &max_cones {
            for id in cone.rays() {
                if !rays.contains_key(id) {
                    return Err(FanError::UnknownRay { id: id.clone() });
                }
            }
            if !seen.insert(cone.clone()) {
                return Err(FanError::DuplicateMaxCone { key: cone.key() });
            }
        }
        let mut max_cones = max_cones;
        max_cones.sort();
        let dim = max_cones.iter().map(Cone::len).max().unwrap_or(0);
        Ok(Fan {
            ambient_dim,
            rays,
            max_cones,
            dim,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Common dimension of the maximal cones, inferred as the largest ray
    /// count among them (validation flags any smaller cone as non-pure).
    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &BTreeMap<RayId, RatVector> {
        &self.rays
    }

    pub fn ray_vector(&self, id: &str) -> Option<&RatVector> {
        self.rays.get(id)
    }

    pub fn max_cones(&self) -> &[Cone] {
        &self.max_cones
    }

    /// Whether `cone` is a face of some maximal cone (the empty cone always
    /// is, provided the fan has any cone at all).
    pub fn is_face(&self, cone: &Cone) -> bool {
        self.max_cones.iter().any(|m| cone.is_face_of(m))
    }

    /// Marked generators of a cone's rays, as matrix rows in canonical ray
    /// order. Panics if an id is unknown — structural well-formedness is a
    /// construction invariant.
    pub fn generator_matrix(&self, cone: &Cone) -> RatMatrix {
        let rows = cone
            .rays()
            .map(|id| self.rays[id].clone())
            .collect::<Vec<_>>();
        RatMatrix::from_rows(rows).expect("generators share the ambient dimension")
    }

    /// All k-dimensional faces across the fan, deduplicated, in canonical
    /// order. `k = 0` yields just the origin cone.
    pub fn faces(&self, k: usize) -> Result<Vec<Cone>, FanError> {
        if k > self.dim {
            return Err(FanError::BadDimension { k, d: self.dim });
        }
        let set: BTreeSet<Cone> = self
            .max_cones
            .iter()
            .flat_map(|c| c.subcones(k))
            .collect();
        Ok(set.into_iter().collect())
    }

    /// Maximal cones containing the given face.
    pub fn star(&self, face: &Cone) -> Vec<&Cone> {
        self.max_cones
            .iter()
            .filter(|m| face.is_face_of(m))
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();

        if self.max_cones.is_empty() {
            violations.push(FanViolation::NoMaximalCones);
        }

        for (id, v) in &self.rays {
            if v.is_zero() {
                violations.push(FanViolation::ZeroRayGenerator { ray: id.clone() });
            }
        }

        let ids: Vec<&RayId> = self.rays.keys().collect();
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                if positively_proportional(&self.rays[ids[i]], &self.rays[ids[j]]) {
                    violations.push(FanViolation::DuplicateRays {
                        first: ids[i].clone(),
                        second: ids[j].clone(),
                    });
                }
            }
        }

        let mut simplicial = Vec::with_capacity(self.max_cones.len());
        for cone in &self.max_cones {
            let rank = self.generator_matrix(cone).rank();
            let ok = rank == cone.len();
            if !ok {
                violations.push(FanViolation::NonSimplicialCone {
                    cone: cone.clone(),
                    rank,
                });
            }
            simplicial.push(ok);
            if cone.len() != self.dim {
                violations.push(FanViolation::NonPureCone {
                    cone: cone.clone(),
                    expected_dim: self.dim,
                });
            }
        }

        // Pairwise intersection check. Soundness of the LP reduction needs
        // linearly independent generators, so pairs with a non-simplicial
        // member are skipped (they are already reported above).
        for i in 0..self.max_cones.len() {
            for j in i + 1..self.max_cones.len() {
                if !simplicial[i] || !simplicial[j] {
                    continue;
                }
                if let Some(witness) =
                    self.improper_witness(&self.max_cones[i], &self.max_cones[j])
                {
                    violations.push(FanViolation::ImproperIntersection {
                        first: self.max_cones[i].clone(),
                        second: self.max_cones[j].clone(),
                        witness,
                    });
                }
            }
        }

        ValidationReport { violations }
    }

    /// Searches for a point of `a ∩ b` outside the cone spanned by the
    /// common rays. Writing points of the intersection as nonnegative
    /// combinations on both sides, such a point exists iff some coefficient
    /// on a non-shared ray can be made positive; that is a linear program
    /// over the simplex-normalized coefficient cone, solved exactly.
    fn improper_witness(&self, a: &Cone, b: &Cone) -> Option<RatVector> {
        let a_ids: Vec<&RayId> = a.rays().collect();
        let b_ids: Vec<&RayId> = b.rays().collect();
        let common = a.intersection(b);
        let nvars = a_ids.len() + b_ids.len();
        if nvars == 0 {
            return None;
        }

        let mut rows = Vec::with_capacity(self.ambient_dim + 1);
        for coord in 0..self.ambient_dim {
            let mut row = Vec::with_capacity(nvars);
            for id in &a_ids {
                row.push(self.rays[*id][coord].clone());
            }
            for id in &b_ids {
                row.push(-&self.rays[*id][coord]);
            }
            rows.push(RatVector::new(row));
        }
        rows.push(RatVector::new(vec![Rat::one(); nvars]));
        let matrix = RatMatrix::from_rows(rows).expect("LP rows are rectangular");

        let mut rhs = vec![Rat::zero(); self.ambient_dim];
        rhs.push(Rat::one());

        // Objective: total coefficient mass on rays outside the common face.
        let cost: Vec<Rat> = a_ids
            .iter()
            .chain(b_ids.iter())
            .map(|id| {
                if common.contains(id) {
                    Rat::zero()
                } else {
                    Rat::one()
                }
            })
            .collect();

        match arith::maximize(&matrix, &RatVector::new(rhs), &cost) {
            LpOutcome::Infeasible => None,
            LpOutcome::Unbounded => {
                unreachable!("feasible region is contained in the unit simplex")
            }
            LpOutcome::Optimal { value, x } => {
                if !value.is_positive() {
                    return None;
                }
                let mut witness = RatVector::zeros(self.ambient_dim);
                for (coef, id) in x.iter().zip(a_ids.iter()) {
                    witness = witness.add(&self.rays[*id].scale(coef));
                }
                Some(witness)
            }
        }
    }
}

fn positively_proportional(u: &RatVector, v: &RatVector) -> bool {
    if u.is_zero() || v.is_zero() {
        // Zero generators are reported separately; they are not duplicates.
        return false;
    }
    let lead = (0..u.dim()).find(|&i| !u[i].is_zero()).expect("u is nonzero");
    if v[lead].is_zero() {
        return false;
    }
    let lambda = &v[lead] / &u[lead];
    if !lambda.is_positive() {
        return false;
    }
    u.scale(&lambda) == *v
}

/// Strictly positive weights on the maximal cones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightFunction {
    weights: BTreeMap<Cone, Rat>,
}

impl WeightFunction {
    pub fn new(weights: BTreeMap<Cone, Rat>) -> Result<Self, FanError> {
        for (cone, w) in &weights {
            if !w.is_positive() {
                return Err(FanError::NonPositiveWeight { key: cone.key() });
            }
        }
        Ok(WeightFunction { weights })
    }

    /// Weight 1 on every maximal cone.
    pub fn ones(fan: &Fan) -> Self {
        WeightFunction {
            weights: fan
                .max_cones()
                .iter()
                .map(|c| (c.clone(), Rat::one()))
                .collect(),
        }
    }

    pub fn get(&self, cone: &Cone) -> Result<&Rat, FanError> {
        self.weights
            .get(cone)
            .ok_or_else(|| FanError::MissingWeight { key: cone.key() })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Cone, &Rat)> + '_ {
        self.weights.iter()
    }

    /// Same weights scaled by a positive constant.
    pub fn scaled(&self, c: &Rat) -> Result<Self, FanError> {
        WeightFunction::new(
            self.weights
                .iter()
                .map(|(k, w)| (k.clone(), w * c))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancingFailure {
    pub face: Cone,
    /// The weighted sum of opposite-ray generators that escaped the face's
    /// span.
    pub witness: RatVector,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BalancingReport {
    pub failures: Vec<BalancingFailure>,
}

impl BalancingReport {
    pub fn is_balanced(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks the weighted balancing condition: around every codimension-one
/// face τ, the sum of `ω(σ) · u_{σ∖τ}` over maximal cones σ ⊇ τ must lie in
/// the linear span of τ's generators. Membership is decided by exact rank
/// comparison.
pub fn check_balancing(fan: &Fan, weights: &WeightFunction) -> Result<BalancingReport, FanError> {
    let d = fan.dimension();
    let mut failures = Vec::new();
    if d == 0 {
        return Ok(BalancingReport { failures });
    }
    for tau in fan.faces(d - 1)? {
        let mut sum = RatVector::zeros(fan.ambient_dim());
        for sigma in fan.star(&tau) {
            if sigma.len() != d {
                // Non-pure fans are caught by validation; skip stray cones.
                continue;
            }
            let w = weights.get(sigma)?;
            for id in sigma.rays() {
                if !tau.contains(id) {
                    sum = sum.add(&fan.ray_vector(id).expect("ray exists").scale(w));
                }
            }
        }
        let spanning: Vec<RatVector> = tau
            .rays()
            .map(|id| fan.ray_vector(id).expect("ray exists").clone())
            .collect();
        if !arith::span_contains(&spanning, &sum) {
            failures.push(BalancingFailure {
                face: tau,
                witness: sum,
            });
        }
    }
    Ok(BalancingReport { failures })
}

/// On-disk form of a fan (with optional weights), one JSON object.
#[derive(Serialize, Deserialize)]
struct FanFile {
    ambient_dim: usize,
    rays: BTreeMap<String, Vec<Rat>>,
    max_cones: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    weights: BTreeMap<String, Rat>,
}

/// Parses a fan file; omitted weights default to 1 per maximal cone.
pub fn fan_from_json(text: &str) -> Result<(Fan, WeightFunction), FanError> {
    let file: FanFile = serde_json::from_str(text).map_err(|e| FanError::Json(e.to_string()))?;
    let rays: BTreeMap<RayId, RatVector> = file
        .rays
        .into_iter()
        .map(|(id, coords)| (id, RatVector::new(coords)))
        .collect();
    let mut cones = Vec::with_capacity(file.max_cones.len());
    for ids in file.max_cones {
        let cone = Cone::from_ids(ids.iter().cloned());
        if cone.len() != ids.len() {
            return Err(FanError::RepeatedRayInCone {
                key: ids.join(","),
            });
        }
        cones.push(cone);
    }
    let fan = Fan::new(file.ambient_dim, rays, cones)?;

    let mut weights: BTreeMap<Cone, Rat> = fan
        .max_cones()
        .iter()
        .map(|c| (c.clone(), Rat::one()))
        .collect();
    for (key, w) in file.weights {
        let cone = Cone::from_ids(key.split(',').filter(|s| !s.is_empty()));
        if !weights.contains_key(&cone) {
            return Err(FanError::UnknownWeightCone { key });
        }
        weights.insert(cone, w);
    }
    let weights = WeightFunction::new(weights)?;
    Ok((fan, weights))
}

/// Serializes a fan with its weights to the JSON file format.
pub fn fan_to_json(fan: &Fan, weights: &WeightFunction) -> String {
    let file = FanFile {
        ambient_dim: fan.ambient_dim(),
        rays: fan
            .rays()
            .iter()
            .map(|(id, v)| (id.clone(), v.iter().cloned().collect()))
            .collect(),
        max_cones: fan
            .max_cones()
            .iter()
            .map(|c| c.rays().cloned().collect())
            .collect(),
        weights: weights
            .iter()
            .map(|(c, w)| (c.key(), w.clone()))
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("fan file serializes")
}
