//! Matroids, building sets, and Bergman fans.
//!
//! A matroid is given here by its lattice of flats over a ground set of at
//! most 64 named elements (flats are stored as bitmasks). Building sets
//! select the flats that become rays of the Bergman fan; nested sets of
//! flats become its cones. Bergman fans are balanced with unit weights, so
//! the Chow-ring machinery applies to them, and [`construct_cubical_z`]
//! produces a certified cubical truncation vector from an explicit
//! closed-form family, making the volume identity non-vacuous on every
//! Bergman fan.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use serde::Deserialize;

use crate::arith::{ArithError, Rat, RatVector};
use crate::fan::{Cone, Fan, FanError, WeightFunction};
use crate::normal::{w_vector, InnerProduct, NormalError, ZValue};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatroidError {
    #[error("ground set must have at least two elements")]
    GroundTooSmall,
    #[error("ground set exceeds 64 elements")]
    GroundTooLarge,
    #[error("duplicate ground element {name:?}")]
    DuplicateElement { name: String },
    #[error("element names must be nonempty and free of ',' and '|': {name:?}")]
    BadElementName { name: String },
    #[error("unknown element {name:?}")]
    UnknownElement { name: String },
    #[error("flat {{{label}}} is listed twice")]
    DuplicateFlat { label: String },
    #[error("a loopless matroid must have the empty flat")]
    MissingEmptyFlat,
    #[error("the full ground set must be a flat")]
    MissingFullFlat,
    #[error("flats are not closed under intersection: {{{a}}} and {{{b}}}")]
    NotIntersectionClosed { a: String, b: String },
    #[error(
        "element {element:?} lies in {count} minimal flats strictly above {{{flat}}}, \
         expected exactly one"
    )]
    CoverPartition {
        flat: String,
        element: String,
        count: usize,
    },
    #[error("{{{label}}} is not a flat of the matroid")]
    NotAFlat { label: String },
    #[error("building sets may not contain the empty flat")]
    EmptyFlatInBuildingSet,
    #[error("building sets must contain the full ground set")]
    MissingTopFlat,
    #[error("not a building set: the interval below {{{flat}}} does not factor")]
    NotABuildingSet { flat: String },
    #[error("too many non-atomic proper flats ({count}) to enumerate building sets")]
    EnumerationTooLarge { count: usize },
    #[error("scale must be an integer at least 2, got {scale}")]
    BadScale { scale: Rat },
    #[error("no cubical value certified after {attempts} attempts (last scale {scale})")]
    CubicalSearchExhausted { attempts: u32, scale: Rat },
    #[error("bad graph: {0}")]
    Graph(String),
    #[error("malformed matroid file: {0}")]
    Json(String),
    #[error(transparent)]
    Fan(#[from] FanError),
    #[error(transparent)]
    Normal(#[from] NormalError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// A loopless matroid presented by its lattice of flats. Ground elements
/// are named; internally each flat is a bitmask over the ground order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matroid {
    ground: Vec<String>,
    index: BTreeMap<String, usize>,
    /// All flats, sorted by (popcount, mask) — from the empty flat up.
    flats: Vec<u64>,
    flat_set: BTreeSet<u64>,
    ranks: BTreeMap<u64, usize>,
    full: u64,
}

fn is_subset(a: u64, b: u64) -> bool {
    a & !b == 0
}

impl Matroid {
    pub fn new<I, S>(ground: Vec<String>, flats: I) -> Result<Self, MatroidError>
    where
        I: IntoIterator<Item = BTreeSet<S>>,
        S: AsRef<str>,
    {
        if ground.len() > 64 {
            return Err(MatroidError::GroundTooLarge);
        }
        let mut index = BTreeMap::new();
        for (i, name) in ground.iter().enumerate() {
            if name.is_empty() || name.contains(',') || name.contains('|') {
                return Err(MatroidError::BadElementName { name: name.clone() });
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(MatroidError::DuplicateElement { name: name.clone() });
            }
        }
        let full = if ground.len() == 64 {
            u64::MAX
        } else {
            (1u64 << ground.len()) - 1
        };

        let mut matroid = Matroid {
            ground,
            index,
            flats: Vec::new(),
            flat_set: BTreeSet::new(),
            ranks: BTreeMap::new(),
            full,
        };

        for flat in flats {
            let mut mask = 0u64;
            for name in &flat {
                mask |= matroid.element_mask(name.as_ref())?;
            }
            if !matroid.flat_set.insert(mask) {
                return Err(MatroidError::DuplicateFlat {
                    label: matroid.flat_label(mask),
                });
            }
        }
        matroid.flats = matroid.flat_set.iter().copied().collect();
        matroid
            .flats
            .sort_by_key(|m| (m.count_ones(), *m));

        matroid.validate_lattice()?;
        matroid.compute_ranks();
        Ok(matroid)
    }

    /// The graphic matroid of a graph: ground set the edge names, flats the
    /// edge sets induced by vertex partitions with connected blocks.
    pub fn from_graph(
        vertices: &[String],
        edges: &BTreeMap<String, (String, String)>,
    ) -> Result<Self, MatroidError> {
        let vindex: BTreeMap<&str, usize> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        if vindex.len() != vertices.len() {
            return Err(MatroidError::Graph("duplicate vertex name".into()));
        }
        let mut edge_ends = Vec::new();
        let ground: Vec<String> = edges.keys().cloned().collect();
        for (u, v) in edges.values() {
            let ui = *vindex
                .get(u.as_str())
                .ok_or_else(|| MatroidError::Graph(format!("unknown vertex {u:?}")))?;
            let vi = *vindex
                .get(v.as_str())
                .ok_or_else(|| MatroidError::Graph(format!("unknown vertex {v:?}")))?;
            if ui == vi {
                return Err(MatroidError::Graph(format!("loop at vertex {u:?}")));
            }
            edge_ends.push((ui, vi));
        }

        // Enumerate partitions of the vertices; keep those whose blocks are
        // connected, each of which induces a flat.
        let mut flats: BTreeSet<u64> = BTreeSet::new();
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        fn descend(
            next: usize,
            nverts: usize,
            blocks: &mut Vec<Vec<usize>>,
            edge_ends: &[(usize, usize)],
            flats: &mut BTreeSet<u64>,
        ) {
            if next == nverts {
                let mut block_of = vec![usize::MAX; nverts];
                for (b, block) in blocks.iter().enumerate() {
                    for &v in block {
                        block_of[v] = b;
                    }
                }
                let mut mask = 0u64;
                for (e, &(u, v)) in edge_ends.iter().enumerate() {
                    if block_of[u] == block_of[v] {
                        mask |= 1u64 << e;
                    }
                }
                // Every block must be connected by the edges inside it.
                for block in blocks.iter() {
                    if block.len() <= 1 {
                        continue;
                    }
                    let mut seen = vec![false; nverts];
                    let mut stack = vec![block[0]];
                    seen[block[0]] = true;
                    let mut count = 1;
                    while let Some(x) = stack.pop() {
                        for (e, &(u, v)) in edge_ends.iter().enumerate() {
                            if mask & (1u64 << e) == 0 {
                                continue;
                            }
                            let other = if u == x {
                                v
                            } else if v == x {
                                u
                            } else {
                                continue;
                            };
                            if block_of[other] == block_of[x] && !seen[other] {
                                seen[other] = true;
                                count += 1;
                                stack.push(other);
                            }
                        }
                    }
                    if count != block.len() {
                        return;
                    }
                }
                flats.insert(mask);
                return;
            }
            for b in 0..blocks.len() {
                blocks[b].push(next);
                descend(next + 1, nverts, blocks, edge_ends, flats);
                blocks[b].pop();
            }
            blocks.push(vec![next]);
            descend(next + 1, nverts, blocks, edge_ends, flats);
            blocks.pop();
        }
        descend(0, vertices.len(), &mut blocks, &edge_ends, &mut flats);

        let named: Vec<BTreeSet<String>> = flats
            .iter()
            .map(|mask| {
                ground
                    .iter()
                    .enumerate()
                    .filter(|(e, _)| mask & (1u64 << e) != 0)
                    .map(|(_, name)| name.clone())
                    .collect()
            })
            .collect();
        Matroid::new(ground, named)
    }

    pub fn from_json(text: &str) -> Result<Self, MatroidError> {
        #[derive(Deserialize)]
        struct GraphFile {
            vertices: Vec<String>,
            edges: BTreeMap<String, (String, String)>,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum MatroidFile {
            Explicit {
                ground: Vec<String>,
                flats: Vec<BTreeSet<String>>,
            },
            Graph {
                graph: GraphFile,
            },
        }
        let file: MatroidFile =
            serde_json::from_str(text).map_err(|e| MatroidError::Json(e.to_string()))?;
        match file {
            MatroidFile::Explicit { ground, flats } => Matroid::new(ground, flats),
            MatroidFile::Graph { graph } => Matroid::from_graph(&graph.vertices, &graph.edges),
        }
    }

    fn validate_lattice(&self) -> Result<(), MatroidError> {
        if !self.flat_set.contains(&0) {
            return Err(MatroidError::MissingEmptyFlat);
        }
        if !self.flat_set.contains(&self.full) {
            return Err(MatroidError::MissingFullFlat);
        }
        for (i, &a) in self.flats.iter().enumerate() {
            for &b in &self.flats[i + 1..] {
                if !self.flat_set.contains(&(a & b)) {
                    return Err(MatroidError::NotIntersectionClosed {
                        a: self.flat_label(a),
                        b: self.flat_label(b),
                    });
                }
            }
        }
        // Minimal flats strictly above F must partition E∖F.
        for &f in &self.flats {
            let above: Vec<u64> = self
                .flats
                .iter()
                .copied()
                .filter(|&g| g != f && is_subset(f, g))
                .collect();
            let covers: Vec<u64> = above
                .iter()
                .copied()
                .filter(|&g| !above.iter().any(|&h| h != g && is_subset(h, g)))
                .collect();
            for e in 0..self.ground.len() {
                let bit = 1u64 << e;
                if f & bit != 0 {
                    continue;
                }
                let count = covers.iter().filter(|&&g| g & bit != 0).count();
                if count != 1 {
                    return Err(MatroidError::CoverPartition {
                        flat: self.flat_label(f),
                        element: self.ground[e].clone(),
                        count,
                    });
                }
            }
        }
        Ok(())
    }

    fn compute_ranks(&mut self) {
        let mut ranks: BTreeMap<u64, usize> = BTreeMap::new();
        for &f in &self.flats {
            let r = self
                .flats
                .iter()
                .filter(|&&g| g != f && is_subset(g, f))
                .map(|g| ranks[g] + 1)
                .max()
                .unwrap_or(0);
            ranks.insert(f, r);
        }
        self.ranks = ranks;
    }

    pub fn ground(&self) -> &[String] {
        &self.ground
    }

    pub fn size(&self) -> usize {
        self.ground.len()
    }

    /// The rank of the whole matroid.
    pub fn rank(&self) -> usize {
        self.ranks[&self.full]
    }

    pub fn flats(&self) -> &[u64] {
        &self.flats
    }

    pub fn is_flat(&self, mask: u64) -> bool {
        self.flat_set.contains(&mask)
    }

    pub fn full_mask(&self) -> u64 {
        self.full
    }

    /// Nonempty flats other than the full ground set, ascending.
    pub fn proper_flats(&self) -> impl Iterator<Item = u64> + '_ {
        let full = self.full;
        self.flats
            .iter()
            .copied()
            .filter(move |&f| f != 0 && f != full)
    }

    pub fn flat_rank(&self, mask: u64) -> Option<usize> {
        self.ranks.get(&mask).copied()
    }

    pub fn element_mask(&self, name: &str) -> Result<u64, MatroidError> {
        self.index
            .get(name)
            .map(|i| 1u64 << i)
            .ok_or_else(|| MatroidError::UnknownElement {
                name: name.to_string(),
            })
    }

    pub fn set_mask<'a, I>(&self, names: I) -> Result<u64, MatroidError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut mask = 0;
        for name in names {
            mask |= self.element_mask(name)?;
        }
        Ok(mask)
    }

    /// The smallest flat containing the given set.
    pub fn closure(&self, mask: u64) -> u64 {
        self.flats
            .iter()
            .copied()
            .filter(|&f| is_subset(mask, f))
            .fold(self.full, |acc, f| acc & f)
    }

    /// The lattice join: the closure of the union.
    pub fn join(&self, a: u64, b: u64) -> u64 {
        self.closure(a | b)
    }

    pub fn elements_of(&self, mask: u64) -> Vec<&str> {
        (0..self.ground.len())
            .filter(|e| mask & (1u64 << e) != 0)
            .map(|e| self.ground[e].as_str())
            .collect()
    }

    /// A deterministic name for a flat: element names in ground order,
    /// concatenated when every name is a single character and joined with
    /// '|' otherwise.
    pub fn flat_label(&self, mask: u64) -> String {
        let names = self.elements_of(mask);
        if self.ground.iter().all(|n| n.chars().count() == 1) {
            names.concat()
        } else {
            names.join("|")
        }
    }

    fn interval_below(&self, f: u64) -> Vec<u64> {
        self.flats
            .iter()
            .copied()
            .filter(|&g| is_subset(g, f))
            .collect()
    }

    /// Whether the interval below `f` factors as the product of the
    /// intervals below the maximal building-set members under `f`, via the
    /// join map.
    fn interval_factors(&self, gset: &BTreeSet<u64>, f: u64) -> bool {
        if gset.contains(&f) {
            // The only factor is f itself and the join map is the identity.
            return true;
        }
        let below: Vec<u64> = gset.iter().copied().filter(|&g| is_subset(g, f)).collect();
        let factors: Vec<u64> = below
            .iter()
            .copied()
            .filter(|&g| !below.iter().any(|&h| h != g && is_subset(g, h)))
            .collect();
        if factors.is_empty() {
            return false;
        }
        let target = self.interval_below(f);
        let tuples: Vec<Vec<u64>> = factors
            .iter()
            .map(|&g| self.interval_below(g))
            .multi_cartesian_product()
            .collect();
        if tuples.len() != target.len() {
            return false;
        }
        let joins: Vec<u64> = tuples
            .iter()
            .map(|tuple| self.closure(tuple.iter().fold(0, |acc, &g| acc | g)))
            .collect();
        let distinct: BTreeSet<u64> = joins.iter().copied().collect();
        if distinct.len() != target.len() {
            return false;
        }
        // The join map is a monotone bijection; for a poset isomorphism its
        // inverse must be monotone too.
        for i in 0..tuples.len() {
            for j in 0..tuples.len() {
                if is_subset(joins[i], joins[j])
                    && !tuples[i]
                        .iter()
                        .zip(&tuples[j])
                        .all(|(&a, &b)| is_subset(a, b))
                {
                    return false;
                }
            }
        }
        true
    }

    /// Checks the building-set axioms: a set of nonempty flats containing
    /// the full ground set such that the interval below every nonempty flat
    /// factors through its maximal members.
    pub fn validate_building_set(&self, gset: &BTreeSet<u64>) -> Result<(), MatroidError> {
        if gset.contains(&0) {
            return Err(MatroidError::EmptyFlatInBuildingSet);
        }
        for &g in gset {
            if !self.is_flat(g) {
                return Err(MatroidError::NotAFlat {
                    label: self.flat_label(g),
                });
            }
        }
        if !gset.contains(&self.full) {
            return Err(MatroidError::MissingTopFlat);
        }
        for &f in &self.flats {
            if f == 0 {
                continue;
            }
            if !self.interval_factors(gset, f) {
                return Err(MatroidError::NotABuildingSet {
                    flat: self.flat_label(f),
                });
            }
        }
        Ok(())
    }

    pub fn is_building_set(&self, gset: &BTreeSet<u64>) -> bool {
        self.validate_building_set(gset).is_ok()
    }

    /// The maximal building set: every nonempty flat.
    pub fn maximal_building_set(&self) -> BTreeSet<u64> {
        self.flats.iter().copied().filter(|&f| f != 0).collect()
    }

    /// All building sets, smallest first. Rank-one flats belong to every
    /// building set, so the search varies only the non-atomic proper flats.
    pub fn enumerate_building_sets(&self) -> Result<Vec<BTreeSet<u64>>, MatroidError> {
        let atoms: Vec<u64> = self
            .flats
            .iter()
            .copied()
            .filter(|f| self.ranks[f] == 1)
            .collect();
        let optional: Vec<u64> = self
            .proper_flats()
            .filter(|f| self.ranks[f] > 1)
            .collect();
        if optional.len() > 20 {
            return Err(MatroidError::EnumerationTooLarge {
                count: optional.len(),
            });
        }
        let mut found = Vec::new();
        for choice in 0u32..(1u32 << optional.len()) {
            let mut gset: BTreeSet<u64> = atoms.iter().copied().collect();
            gset.insert(self.full);
            for (i, &f) in optional.iter().enumerate() {
                if choice & (1 << i) != 0 {
                    gset.insert(f);
                }
            }
            if self.is_building_set(&gset) {
                found.push(gset);
            }
        }
        found.sort_by_key(|g| (g.len(), g.iter().copied().collect::<Vec<u64>>()));
        Ok(found)
    }

    /// Whether a set of building-set members is nested: every subset of
    /// pairwise incomparable members (of size at least two) must have its
    /// join outside the building set.
    pub fn is_nested_set(&self, gset: &BTreeSet<u64>, members: &[u64]) -> bool {
        let n = members.len();
        for pick in 1u32..(1u32 << n) {
            if pick.count_ones() < 2 {
                continue;
            }
            let chosen: Vec<u64> = (0..n)
                .filter(|i| pick & (1 << i) != 0)
                .map(|i| members[i])
                .collect();
            let antichain = chosen.iter().enumerate().all(|(i, &a)| {
                chosen
                    .iter()
                    .enumerate()
                    .all(|(j, &b)| i == j || (!is_subset(a, b) && !is_subset(b, a)))
            });
            if !antichain {
                continue;
            }
            let join = self.closure(chosen.iter().fold(0, |acc, &g| acc | g));
            if gset.contains(&join) {
                return false;
            }
        }
        true
    }

    /// All nested subsets of the proper part of the building set, the empty
    /// set included, in ascending order.
    pub fn nested_sets(&self, gset: &BTreeSet<u64>) -> Result<Vec<BTreeSet<u64>>, MatroidError> {
        self.validate_building_set(gset)?;
        let proper: Vec<u64> = gset.iter().copied().filter(|&g| g != self.full).collect();
        let mut out: Vec<BTreeSet<u64>> = Vec::new();
        let mut current: Vec<u64> = Vec::new();
        fn grow(
            matroid: &Matroid,
            gset: &BTreeSet<u64>,
            proper: &[u64],
            start: usize,
            current: &mut Vec<u64>,
            out: &mut Vec<BTreeSet<u64>>,
        ) {
            out.push(current.iter().copied().collect());
            for i in start..proper.len() {
                current.push(proper[i]);
                if matroid.is_nested_set(gset, current) {
                    grow(matroid, gset, proper, i + 1, current, out);
                }
                current.pop();
            }
        }
        grow(self, gset, &proper, 0, &mut current, &mut out);
        out.sort();
        Ok(out)
    }

    /// The nested sets that cannot be extended by any further member.
    pub fn maximal_nested_sets(
        &self,
        gset: &BTreeSet<u64>,
    ) -> Result<Vec<BTreeSet<u64>>, MatroidError> {
        let all = self.nested_sets(gset)?;
        let lookup: BTreeSet<&BTreeSet<u64>> = all.iter().collect();
        let proper: Vec<u64> = gset.iter().copied().filter(|&g| g != self.full).collect();
        Ok(all
            .iter()
            .filter(|nested| {
                proper.iter().all(|g| {
                    if nested.contains(g) {
                        return true;
                    }
                    let mut bigger: BTreeSet<u64> = (*nested).clone();
                    bigger.insert(*g);
                    !lookup.contains(&bigger)
                })
            })
            .cloned()
            .collect())
    }

    /// The ray generator of a building-set member: working in the quotient
    /// of the ground-set coordinate space by the all-ones vector, with the
    /// first ground element's coordinate eliminated.
    fn ray_generator(&self, g: u64) -> RatVector {
        let n = self.size() - 1;
        let mut coords = vec![Rat::zero(); n];
        if g & 1 == 0 {
            for e in 1..self.size() {
                if g & (1u64 << e) != 0 {
                    coords[e - 1] = Rat::one();
                }
            }
        } else {
            for e in 1..self.size() {
                if g & (1u64 << e) == 0 {
                    coords[e - 1] = -Rat::one();
                }
            }
        }
        RatVector::new(coords)
    }

    /// Builds the Bergman fan of the matroid with respect to a building
    /// set: one ray per proper member, one cone per nested set, with unit
    /// weights on the maximal cones.
    pub fn bergman_fan(
        &self,
        gset: &BTreeSet<u64>,
    ) -> Result<(Fan, WeightFunction), MatroidError> {
        if self.size() < 2 {
            return Err(MatroidError::GroundTooSmall);
        }
        let maximal = self.maximal_nested_sets(gset)?;
        let mut rays = BTreeMap::new();
        for g in gset.iter().copied().filter(|&g| g != self.full) {
            rays.insert(self.flat_label(g), self.ray_generator(g));
        }
        let max_cones: Vec<Cone> = maximal
            .iter()
            .map(|nested| Cone::from_ids(nested.iter().map(|&g| self.flat_label(g))))
            .collect();
        let fan = Fan::new(self.size() - 1, rays, max_cones)?;
        let weights = WeightFunction::ones(&fan);
        Ok((fan, weights))
    }
}

/// Parses a building set given as a JSON array of flats (each a list of
/// element names).
pub fn building_set_from_json(matroid: &Matroid, text: &str) -> Result<BTreeSet<u64>, MatroidError> {
    let flats: Vec<BTreeSet<String>> =
        serde_json::from_str(text).map_err(|e| MatroidError::Json(e.to_string()))?;
    let mut gset = BTreeSet::new();
    for flat in &flats {
        let mask = matroid.set_mask(flat.iter().map(String::as_str))?;
        if !gset.insert(mask) {
            return Err(MatroidError::DuplicateFlat {
                label: matroid.flat_label(mask),
            });
        }
    }
    matroid.validate_building_set(&gset)?;
    Ok(gset)
}

pub fn building_set_to_json(matroid: &Matroid, gset: &BTreeSet<u64>) -> String {
    let flats: Vec<Vec<&str>> = gset.iter().map(|&g| matroid.elements_of(g)).collect();
    serde_json::to_string_pretty(&flats).expect("building set serializes")
}

/// The closed-form truncation values at a fixed integer scale: for a
/// proper member G, the value is |G| − scale^(−|Gᶜ|) when the first ground
/// element is outside G, and |Gᶜ| − scale^(−|G|) when it is inside. For all
/// sufficiently large scales these values are cubical for the standard dot
/// product on the Bergman fan's coordinates.
pub fn cubical_z_for_scale(
    matroid: &Matroid,
    gset: &BTreeSet<u64>,
    scale: &Rat,
) -> Result<ZValue, MatroidError> {
    if !scale.is_integer() || scale < &Rat::from_int(2) {
        return Err(MatroidError::BadScale {
            scale: scale.clone(),
        });
    }
    let mut z = ZValue::from_pairs::<_, String>([]);
    for g in gset.iter().copied().filter(|&g| g != matroid.full_mask()) {
        let size = g.count_ones() as i64;
        let co_size = matroid.size() as i64 - size;
        let value = if g & 1 == 0 {
            Rat::from_int(size) - scale.pow(-(co_size as i32))?
        } else {
            Rat::from_int(co_size) - scale.pow(-(size as i32))?
        };
        z.insert(matroid.flat_label(g), value);
    }
    Ok(z)
}

/// The vertex-coefficient table of a normal complex: for each nonempty
/// face τ of each maximal cone, the coefficients expressing the vertex w_τ
/// over τ's ray generators. All coefficients are positive exactly when z is
/// cubical (every vertex interior to its face); zeros mark the
/// pseudo-cubical boundary.
pub fn vertex_coefficients(
    fan: &Fan,
    ip: &InnerProduct,
    z: &ZValue,
) -> Result<BTreeMap<Cone, BTreeMap<crate::fan::RayId, Rat>>, NormalError> {
    let mut faces: BTreeSet<Cone> = BTreeSet::new();
    for sigma in fan.max_cones() {
        for tau in sigma.all_faces() {
            if !tau.is_empty() {
                faces.insert(tau);
            }
        }
    }
    faces
        .into_iter()
        .map(|tau| {
            let w = w_vector(fan, ip, z, &tau)?;
            Ok((tau, w.coeffs))
        })
        .collect()
}

/// The smallest entry of [`vertex_coefficients`], or None when the fan has
/// no nonempty faces.
pub fn minimum_vertex_coefficient(
    fan: &Fan,
    ip: &InnerProduct,
    z: &ZValue,
) -> Result<Option<Rat>, NormalError> {
    Ok(vertex_coefficients(fan, ip, z)?
        .into_values()
        .flat_map(BTreeMap::into_values)
        .min())
}

/// A Bergman fan together with a certified cubical truncation vector.
#[derive(Debug, Clone)]
pub struct BergmanConstruction {
    pub fan: Fan,
    pub weights: WeightFunction,
    pub z: ZValue,
    /// The scale the certificate succeeded at.
    pub scale: Rat,
    /// How many scales were tried (the scale is squared after a failure).
    pub attempts: u32,
    /// The certificate: per nonempty face, the coefficients of its vertex
    /// over the face's rays, all strictly positive.
    pub certificate: BTreeMap<Cone, BTreeMap<crate::fan::RayId, Rat>>,
    /// The smallest certificate entry. None only for zero-dimensional fans.
    pub min_coefficient: Option<Rat>,
}

/// Builds the Bergman fan and finds a certified cubical truncation vector
/// from the closed-form family, starting at scale 2·|ground| and squaring
/// until the certificate passes (at most eight escalations).
pub fn construct_cubical_z(
    matroid: &Matroid,
    gset: &BTreeSet<u64>,
) -> Result<BergmanConstruction, MatroidError> {
    let (fan, weights) = matroid.bergman_fan(gset)?;
    let ip = InnerProduct::standard_dot(matroid.size() - 1);
    let mut scale = Rat::from_int(2 * matroid.size() as i64);
    let mut attempts = 0;
    loop {
        attempts += 1;
        let z = cubical_z_for_scale(matroid, gset, &scale)?;
        let certificate = vertex_coefficients(&fan, &ip, &z)?;
        let min = certificate
            .values()
            .flat_map(BTreeMap::values)
            .min()
            .cloned();
        if min.as_ref().is_none_or(Rat::is_positive) {
            return Ok(BergmanConstruction {
                fan,
                weights,
                z,
                scale,
                attempts,
                certificate,
                min_coefficient: min,
            });
        }
        if attempts > 8 {
            return Err(MatroidError::CubicalSearchExhausted { attempts, scale });
        }
        scale = &scale * &scale;
    }
}
