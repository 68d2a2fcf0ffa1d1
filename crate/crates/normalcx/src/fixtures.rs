//! Ready-made example fans, inner products, and truncation vectors.
//!
//! These small instances are exercised throughout the test suites and make
//! handy CLI inputs; they are part of the public API so downstream users can
//! reproduce the documented numbers.

use std::collections::{BTreeMap, BTreeSet};

use crate::arith::{Rat, RatMatrix, RatVector};
use crate::fan::{Cone, Fan};
use crate::matroid::Matroid;
use crate::normal::{InnerProduct, ZValue};

fn ray(coords: &[i64]) -> RatVector {
    RatVector::from_ints(coords)
}

/// The first quadrant of the plane as a single maximal cone with the
/// standard basis as marked generators (ray ids "1" and "2").
pub fn first_quadrant() -> Fan {
    let rays = BTreeMap::from([
        ("1".to_string(), ray(&[1, 0])),
        ("2".to_string(), ray(&[0, 1])),
    ]);
    Fan::new(2, rays, vec![Cone::from_ids(["1", "2"])]).expect("quadrant fan is well-formed")
}

/// A non-diagonal positive definite form on the plane:
/// (a,b) * (c,d) = 4ac + ad + bc + 2bd.
pub fn skew_inner_product() -> InnerProduct {
    InnerProduct::new(RatMatrix::from_int_rows(&[&[4, 1], &[1, 2]]))
        .expect("matrix is symmetric positive definite")
}

/// Truncation values z = (2, 2) on the first quadrant's rays.
pub fn quadrant_z22() -> ZValue {
    ZValue::from_pairs([("1", Rat::from_int(2)), ("2", Rat::from_int(2))])
}

/// Complete two-dimensional fan with six maximal cones; with the right
/// truncation values its normal complex is a hexagon. Ray ids follow the
/// facet pattern: "0", "1", "2" and the pairwise ids "01", "02", "12".
pub fn hexagon_fan() -> Fan {
    let rays = BTreeMap::from([
        ("0".to_string(), ray(&[-1, -1])),
        ("1".to_string(), ray(&[1, 0])),
        ("2".to_string(), ray(&[0, 1])),
        ("01".to_string(), ray(&[0, -1])),
        ("02".to_string(), ray(&[-1, 0])),
        ("12".to_string(), ray(&[1, 1])),
    ]);
    let cones = vec![
        Cone::from_ids(["1", "12"]),
        Cone::from_ids(["12", "2"]),
        Cone::from_ids(["2", "02"]),
        Cone::from_ids(["02", "0"]),
        Cone::from_ids(["0", "01"]),
        Cone::from_ids(["01", "1"]),
    ];
    Fan::new(2, rays, cones).expect("hexagon fan is well-formed")
}

/// Truncation values cutting the hexagon fan into an honest hexagon
/// (cubical with respect to the dot product).
pub fn hexagon_cut_z() -> ZValue {
    ZValue::from_pairs([
        ("0", Rat::from_int(3)),
        ("1", Rat::frac(5, 2)),
        ("2", Rat::from_int(2)),
        ("01", Rat::from_int(2)),
        ("02", Rat::from_int(2)),
        ("12", Rat::from_int(3)),
    ])
}

/// A balanced two-dimensional fan in three-space: eight rays, nine maximal
/// cones, weight one everywhere. Ray ids use the subset-style labels "0",
/// "1", "2", "3", "01", "02", "03", "123".
pub fn balanced_r3_fan() -> Fan {
    let rays = BTreeMap::from([
        ("1".to_string(), ray(&[1, 0, 0])),
        ("2".to_string(), ray(&[0, 1, 0])),
        ("3".to_string(), ray(&[0, 0, 1])),
        ("123".to_string(), ray(&[1, 1, 1])),
        ("0".to_string(), ray(&[-1, -1, -1])),
        ("01".to_string(), ray(&[0, -1, -1])),
        ("02".to_string(), ray(&[-1, 0, -1])),
        ("03".to_string(), ray(&[-1, -1, 0])),
    ]);
    let cones = vec![
        Cone::from_ids(["1", "123"]),
        Cone::from_ids(["2", "123"]),
        Cone::from_ids(["3", "123"]),
        Cone::from_ids(["01", "1"]),
        Cone::from_ids(["02", "2"]),
        Cone::from_ids(["03", "3"]),
        Cone::from_ids(["0", "01"]),
        Cone::from_ids(["0", "02"]),
        Cone::from_ids(["0", "03"]),
    ];
    Fan::new(3, rays, cones).expect("fan is well-formed")
}

/// Truncation values that are cubical for [`balanced_r3_fan`] under the dot
/// product.
pub fn balanced_r3_cut_z() -> ZValue {
    ZValue::from_pairs([
        ("0", Rat::frac(18, 5)),
        ("1", Rat::frac(8, 5)),
        ("2", Rat::frac(8, 5)),
        ("3", Rat::frac(8, 5)),
        ("01", Rat::frac(16, 5)),
        ("02", Rat::frac(16, 5)),
        ("03", Rat::frac(16, 5)),
        ("123", Rat::frac(18, 5)),
    ])
}

/// The positive octant as a single cone with standard-basis generators
/// (ids "e1", "e2", "e3"); with z = (1,1,1) and the dot product its normal
/// polytope is the unit cube.
pub fn octant_cone() -> Fan {
    let rays = BTreeMap::from([
        ("e1".to_string(), ray(&[1, 0, 0])),
        ("e2".to_string(), ray(&[0, 1, 0])),
        ("e3".to_string(), ray(&[0, 0, 1])),
    ]);
    Fan::new(3, rays, vec![Cone::from_ids(["e1", "e2", "e3"])])
        .expect("octant fan is well-formed")
}

pub fn octant_unit_z() -> ZValue {
    ZValue::from_pairs([
        ("e1", Rat::one()),
        ("e2", Rat::one()),
        ("e3", Rat::one()),
    ])
}

/// A single cone whose generators form a chain under coordinate inclusion:
/// (1,0,0), (1,1,0), (1,1,1) with ids "a", "b", "c". With z = (1,2,3) the
/// truncation is pseudo-cubical but degenerate: the cut polytope is a
/// simplex and all but one labeled simplex of its triangulation collapse.
pub fn chain_cone() -> Fan {
    let rays = BTreeMap::from([
        ("a".to_string(), ray(&[1, 0, 0])),
        ("b".to_string(), ray(&[1, 1, 0])),
        ("c".to_string(), ray(&[1, 1, 1])),
    ]);
    Fan::new(3, rays, vec![Cone::from_ids(["a", "b", "c"])])
        .expect("chain-cone fan is well-formed")
}

pub fn chain_z123() -> ZValue {
    ZValue::from_pairs([
        ("a", Rat::from_int(1)),
        ("b", Rat::from_int(2)),
        ("c", Rat::from_int(3)),
    ])
}

fn flat(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// A rank-three matroid on elements 0, 1, 2, 3 in which 1, 2, 3 form a
/// closed dependent triple (three collinear points plus one generic point).
/// Its lattice of flats has three decomposable members — the pairs
/// containing 0 — so it admits eight building sets. The Bergman fan for the
/// maximal building set is exactly [`balanced_r3_fan`].
pub fn collinear_triple_matroid() -> Matroid {
    let ground = ["0", "1", "2", "3"].map(String::from).to_vec();
    let flats = [
        flat(&[]),
        flat(&["0"]),
        flat(&["1"]),
        flat(&["2"]),
        flat(&["3"]),
        flat(&["0", "1"]),
        flat(&["0", "2"]),
        flat(&["0", "3"]),
        flat(&["1", "2", "3"]),
        flat(&["0", "1", "2", "3"]),
    ];
    Matroid::new(ground, flats).expect("collinear-triple matroid is well-formed")
}

/// The uniform matroid of the given rank on elements named "0" through
/// "n-1": every set smaller than the rank is closed.
pub fn uniform_matroid(rank: usize, n: usize) -> Matroid {
    assert!(rank >= 1 && rank <= n && n <= 16, "fixture sized for small cases");
    let ground: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let mut flats: Vec<BTreeSet<String>> = (0u32..1 << n)
        .filter(|mask| (mask.count_ones() as usize) < rank)
        .map(|mask| {
            (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| i.to_string())
                .collect()
        })
        .collect();
    flats.push(ground.iter().cloned().collect());
    Matroid::new(ground, flats).expect("uniform matroid is well-formed")
}

/// The graphic matroid of the complete graph on four vertices: six edges,
/// rank three, with four triangles and three perfect matchings as the
/// rank-two flats.
pub fn k4_matroid() -> Matroid {
    let vertices = ["0", "1", "2", "3"].map(String::from).to_vec();
    let edges = BTreeMap::from(
        [
            ("01", ("0", "1")),
            ("02", ("0", "2")),
            ("03", ("0", "3")),
            ("12", ("1", "2")),
            ("13", ("1", "3")),
            ("23", ("2", "3")),
        ]
        .map(|(e, (u, v))| (e.to_string(), (u.to_string(), v.to_string()))),
    );
    Matroid::from_graph(&vertices, &edges).expect("complete-graph matroid is well-formed")
}
