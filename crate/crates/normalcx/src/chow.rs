//! Chow-ring computations for marked simplicial fans.
//!
//! The Chow ring of a simplicial fan is generated by one class `X_ρ` per
//! ray, modulo linear relations coming from the ambient coordinates and the
//! Stanley–Reisner relations of the fan. A truncation vector z determines
//! the divisor class `D(z) = Σ z_ρ X_ρ`. This module expands products
//! `D(z₁)⋯D(z_k)` over the square-free monomials `X_σ`, applies the degree
//! map (which exists exactly when the weighted fan is balanced), and
//! evaluates the resulting volume polynomial both numerically and
//! symbolically. The headline check, [`verify_volume_identity`], compares
//! the degree of `D(z)^d` against the exact volume of the normal complex
//! from [`crate::normal`].

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::arith::{ArithError, Rat};
use crate::fan::{check_balancing, Cone, Fan, FanError, RayId, WeightFunction};
use crate::normal::{
    complex_volume, gram, gram_det, is_cubical, labeling_sum, Cubicality, InnerProduct,
    NormalError, VolumeMemo, ZValue,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChowError {
    #[error("the weighted fan is not balanced at face <{face}>, so no degree map exists")]
    NotBalanced { face: Cone },
    #[error("the degree map applies to degree {expected}, but this element has degree {found}")]
    NotTopDegree { expected: usize, found: usize },
    #[error(transparent)]
    Normal(#[from] NormalError),
    #[error(transparent)]
    Fan(#[from] FanError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// A product of z-variables, e.g. `z[0]^2*z[12]`. The unit monomial is the
/// empty product.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Monomial(BTreeMap<RayId, u32>);

impl Monomial {
    pub fn unit() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn var(id: impl Into<String>) -> Self {
        Monomial(BTreeMap::from([(id.into(), 1)]))
    }

    pub fn from_exponents<I, S>(exps: I) -> Self
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        Monomial(
            exps.into_iter()
                .filter(|(_, e)| *e > 0)
                .map(|(id, e)| (id.into(), e))
                .collect(),
        )
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn exponents(&self) -> impl Iterator<Item = (&RayId, u32)> + '_ {
        self.0.iter().map(|(id, e)| (id, *e))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (id, e) in &other.0 {
            *out.entry(id.clone()).or_insert(0) += e;
        }
        Monomial(out)
    }

    pub fn eval(&self, z: &ZValue) -> Result<Rat, NormalError> {
        let mut acc = Rat::one();
        for (id, e) in &self.0 {
            let v = z.require(id)?;
            for _ in 0..*e {
                acc *= v;
            }
        }
        Ok(acc)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (id, e) in &self.0 {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "z[{id}]")?;
            if *e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// A polynomial with rational coefficients in the variables `z[ρ]`. Zero
/// coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiPoly {
    terms: BTreeMap<Monomial, Rat>,
}

impl MultiPoly {
    pub fn zero() -> Self {
        MultiPoly::default()
    }

    pub fn one() -> Self {
        MultiPoly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::unit(), c);
        }
        MultiPoly { terms }
    }

    pub fn var(id: impl Into<String>) -> Self {
        MultiPoly {
            terms: BTreeMap::from([(Monomial::var(id), Rat::one())]),
        }
    }

    /// The linear polynomial `Σ c_ρ z[ρ]`.
    pub fn linear_form(form: &BTreeMap<RayId, Rat>) -> Self {
        let mut terms = BTreeMap::new();
        for (id, c) in form {
            if !c.is_zero() {
                terms.insert(Monomial::var(id.clone()), c.clone());
            }
        }
        MultiPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> + '_ {
        self.terms.iter()
    }

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        let mut out = self.terms.clone();
        for (m, c) in &other.terms {
            let e = out.entry(m.clone()).or_insert_with(Rat::zero);
            *e += c;
            if e.is_zero() {
                out.remove(m);
            }
        }
        MultiPoly { terms: out }
    }

    pub fn sub(&self, other: &MultiPoly) -> MultiPoly {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        let mut out: BTreeMap<Monomial, Rat> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m = m1.mul(m2);
                let e = out.entry(m.clone()).or_insert_with(Rat::zero);
                *e += &(c1 * c2);
                if e.is_zero() {
                    out.remove(&m);
                }
            }
        }
        MultiPoly { terms: out }
    }

    pub fn eval(&self, z: &ZValue) -> Result<Rat, NormalError> {
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            acc += &(c * m.eval(z)?);
        }
        Ok(acc)
    }

    /// The largest monomial degree, or None for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn is_homogeneous(&self, degree: u32) -> bool {
        self.terms.keys().all(|m| m.degree() == degree)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct TermFile<'a> {
            coefficient: &'a Rat,
            monomial: BTreeMap<&'a RayId, u32>,
        }
        let rows: Vec<TermFile<'_>> = self
            .terms
            .iter()
            .map(|(m, c)| TermFile {
                coefficient: c,
                monomial: m.exponents().collect(),
            })
            .collect();
        serde_json::to_string_pretty(&rows).expect("polynomial serializes")
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let (sign, magnitude) = if c.is_negative() {
                ("-", c.abs())
            } else {
                ("+", c.clone())
            };
            if i == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if m.is_unit() {
                write!(f, "{magnitude}")?;
            } else if magnitude == Rat::one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{magnitude}*{m}")?;
            }
        }
        Ok(())
    }
}

/// A product of divisor classes written in the square-free basis: the
/// coefficient of `X_σ` for every cone σ of the matching dimension. The
/// coefficients depend on the chosen inner product, but the element of the
/// Chow ring they describe does not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareFreeExpansion {
    degree: usize,
    coefficients: BTreeMap<Cone, Rat>,
}

impl SquareFreeExpansion {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficient(&self, cone: &Cone) -> Option<&Rat> {
        self.coefficients.get(cone)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Cone, &Rat)> + '_ {
        self.coefficients.iter()
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct ExpansionFile<'a> {
            degree: usize,
            terms: BTreeMap<String, &'a Rat>,
        }
        let file = ExpansionFile {
            degree: self.degree,
            terms: self
                .coefficients
                .iter()
                .map(|(cone, c)| (cone.key(), c))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("expansion serializes")
    }
}

/// Expands the product `D(z₁)⋯D(z_k)` in the square-free basis: the
/// coefficient of `X_σ` for σ of dimension k is
/// `det(G_σ) · Σ_f Π_j det(G_{σ(f,j), f(j)}(z_j)) / det(G_{σ(f,j)})`, with
/// f running over orderings of σ's rays and σ(f,j) the j-th prefix face.
/// Every k-dimensional cone of the fan is listed, including those with
/// coefficient zero.
pub fn squarefree_expand(
    fan: &Fan,
    ip: &InnerProduct,
    zs: &[&ZValue],
) -> Result<SquareFreeExpansion, ChowError> {
    let k = zs.len();
    let faces = fan.faces(k)?;
    let mut memo = VolumeMemo::new();
    let mut coefficients = BTreeMap::new();
    for sigma in faces {
        let sum = labeling_sum(fan, ip, zs, &sigma, &mut memo)?;
        let det = gram_det(fan, ip, &sigma, &mut memo)?;
        coefficients.insert(sigma, det * sum);
    }
    Ok(SquareFreeExpansion {
        degree: k,
        coefficients,
    })
}

fn require_balanced(fan: &Fan, weights: &WeightFunction) -> Result<(), ChowError> {
    let report = check_balancing(fan, weights)?;
    match report.failures.into_iter().next() {
        Some(failure) => Err(ChowError::NotBalanced { face: failure.face }),
        None => Ok(()),
    }
}

/// Applies the degree map to a top-degree element: `X_σ ↦ ω(σ)`, extended
/// linearly. The map is well defined only when the weighted fan is
/// balanced, which is re-checked on every call.
pub fn degree(
    fan: &Fan,
    weights: &WeightFunction,
    element: &SquareFreeExpansion,
) -> Result<Rat, ChowError> {
    if element.degree() != fan.dimension() {
        return Err(ChowError::NotTopDegree {
            expected: fan.dimension(),
            found: element.degree(),
        });
    }
    require_balanced(fan, weights)?;
    let mut total = Rat::zero();
    for (sigma, c) in element.iter() {
        total += &(weights.get(sigma)? * c);
    }
    Ok(total)
}

/// The degree of a product of d divisor classes, `deg(D(z₁)⋯D(z_d))` — the
/// multilinear form whose diagonal is the volume polynomial.
pub fn mixed_degree(
    fan: &Fan,
    weights: &WeightFunction,
    ip: &InnerProduct,
    zs: &[&ZValue],
) -> Result<Rat, ChowError> {
    let expansion = squarefree_expand(fan, ip, zs)?;
    degree(fan, weights, &expansion)
}

/// Evaluates the volume polynomial at z: the degree of `D(z)^d`. Defined
/// for every z (no cubicality assumption), provided the weighted fan is
/// balanced.
pub fn volume_polynomial_eval(
    fan: &Fan,
    weights: &WeightFunction,
    ip: &InnerProduct,
    z: &ZValue,
) -> Result<Rat, ChowError> {
    let zs = vec![z; fan.dimension()];
    mixed_degree(fan, weights, ip, &zs)
}

fn symbolic_labeling_sum(
    fan: &Fan,
    ip: &InnerProduct,
    cone: &Cone,
    dets: &mut VolumeMemo,
    memo: &mut BTreeMap<Cone, MultiPoly>,
) -> Result<MultiPoly, ChowError> {
    if let Some(p) = memo.get(cone) {
        return Ok(p.clone());
    }
    if cone.is_empty() {
        return Ok(MultiPoly::one());
    }
    let g = gram(fan, ip, cone)?;
    let det_g = gram_det(fan, ip, cone, dets)?;
    if det_g.is_zero() {
        return Err(ChowError::Arith(ArithError::Singular));
    }
    let mut total = MultiPoly::zero();
    for (col, rho) in cone.rays().enumerate() {
        // The replaced-column determinant is linear in z: expanding along
        // the column gives Σ_η z_η · cofactor(η, ρ).
        let mut form: BTreeMap<RayId, Rat> = BTreeMap::new();
        for (row, eta) in cone.rays().enumerate() {
            let c = g.cofactor(row, col)?;
            if !c.is_zero() {
                form.insert(eta.clone(), c / &det_g);
            }
        }
        let ratio = MultiPoly::linear_form(&form);
        let sub = symbolic_labeling_sum(fan, ip, &cone.without(rho), dets, memo)?;
        total = total.add(&ratio.mul(&sub));
    }
    memo.insert(cone.clone(), total.clone());
    Ok(total)
}

/// The volume polynomial as a symbolic polynomial in the variables `z[ρ]`,
/// homogeneous of degree d. The expansion coefficients depend on the inner
/// product, but the assembled polynomial does not — a fact the test suite
/// exercises rather than assumes.
pub fn volume_polynomial_symbolic(
    fan: &Fan,
    weights: &WeightFunction,
    ip: &InnerProduct,
) -> Result<MultiPoly, ChowError> {
    require_balanced(fan, weights)?;
    let mut dets = VolumeMemo::new();
    let mut memo = BTreeMap::new();
    let mut total = MultiPoly::zero();
    for sigma in fan.max_cones() {
        let sym = symbolic_labeling_sum(fan, ip, sigma, &mut dets, &mut memo)?;
        let det = gram_det(fan, ip, sigma, &mut dets)?;
        total = total.add(&sym.scale(&(weights.get(sigma)? * det)));
    }
    Ok(total)
}

/// The outcome of checking the volume identity at one truncation vector:
/// the Chow-ring value `deg(D(z)^d)` always, and the normal-complex volume
/// whenever z is pseudo-cubical, together with whether the two agree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    /// "cubical", "pseudo-cubical", or "neither".
    pub cubicality: String,
    /// For "neither": one failing face/ray pair. Otherwise absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    /// Number of tight face/ray pairs (nonzero only for "pseudo-cubical").
    pub tight_pairs: usize,
    pub chow_volume: Rat,
    /// Exact volume of the normal complex; absent when z is not
    /// pseudo-cubical, since the complex is not defined there.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_complex_volume: Option<Rat>,
    /// Whether the two volumes agree; absent when only one is defined.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_holds: Option<bool>,
}

/// Checks the volume identity at z: classifies z, evaluates the volume
/// polynomial through the Chow ring, and — when z is pseudo-cubical —
/// computes the normal-complex volume and compares. Errors if the weighted
/// fan is not balanced, because then the Chow side is undefined.
pub fn verify_volume_identity(
    fan: &Fan,
    weights: &WeightFunction,
    ip: &InnerProduct,
    z: &ZValue,
) -> Result<VerificationReport, ChowError> {
    let chow_volume = volume_polynomial_eval(fan, weights, ip, z)?;
    let verdict = is_cubical(fan, ip, z)?;
    let (cubicality, witness, tight_pairs) = match &verdict {
        Cubicality::Cubical => ("cubical".to_string(), None, 0),
        Cubicality::PseudoCubical { tight } => ("pseudo-cubical".to_string(), None, tight.len()),
        Cubicality::Neither { tau, rho } => (
            "neither".to_string(),
            Some(format!("w of face <{tau}> violates the inequality of ray {rho:?}")),
            0,
        ),
    };
    let normal_complex_volume = if verdict.is_pseudo_cubical() {
        Some(complex_volume(fan, weights, ip, z)?)
    } else {
        None
    };
    let identity_holds = normal_complex_volume
        .as_ref()
        .map(|v| *v == chow_volume);
    Ok(VerificationReport {
        cubicality,
        witness,
        tight_pairs,
        chow_volume,
        normal_complex_volume,
        identity_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;

    fn dot2() -> InnerProduct {
        InnerProduct::standard_dot(2)
    }

    fn ones(fan: &Fan) -> WeightFunction {
        WeightFunction::ones(fan)
    }

    #[test]
    fn monomial_display_and_eval() {
        let m = Monomial::from_exponents([("0", 2u32), ("12", 1u32)]);
        assert_eq!(m.to_string(), "z[0]^2*z[12]");
        assert_eq!(m.degree(), 3);
        assert_eq!(Monomial::unit().to_string(), "1");
        let z = ZValue::from_pairs([("0", Rat::from_int(3)), ("12", Rat::frac(1, 2))]);
        assert_eq!(m.eval(&z).unwrap(), Rat::frac(9, 2));
    }

    #[test]
    fn polynomial_arithmetic() {
        let a = MultiPoly::var("a");
        let b = MultiPoly::var("b");
        let sum = a.add(&b);
        let square = sum.mul(&sum);
        assert_eq!(square.num_terms(), 3);
        assert_eq!(
            square.coefficient(&Monomial::from_exponents([("a", 1u32), ("b", 1u32)])),
            Rat::from_int(2)
        );
        assert!(square.is_homogeneous(2));
        assert_eq!(square.total_degree(), Some(2));
        let z = ZValue::from_pairs([("a", Rat::from_int(2)), ("b", Rat::from_int(5))]);
        assert_eq!(square.eval(&z).unwrap(), Rat::from_int(49));

        let diff = square.sub(&square);
        assert!(diff.is_zero());
        assert_eq!(diff.to_string(), "0");
        assert_eq!(diff.total_degree(), None);
    }

    #[test]
    fn polynomial_display_is_signed_and_sorted() {
        let p = MultiPoly::var("a")
            .scale(&Rat::from_int(-1))
            .add(&MultiPoly::var("b").scale(&Rat::frac(3, 2)))
            .add(&MultiPoly::constant(Rat::from_int(4)));
        assert_eq!(p.to_string(), "4 - z[a] + 3/2*z[b]");
    }

    #[test]
    fn expansion_of_the_empty_product_is_the_unit() {
        let fan = first_quadrant();
        let e = squarefree_expand(&fan, &dot2(), &[]).unwrap();
        assert_eq!(e.degree(), 0);
        assert_eq!(e.coefficient(&Cone::empty()), Some(&Rat::one()));
        assert_eq!(e.iter().count(), 1);
    }

    #[test]
    fn degree_one_expansion_recovers_divisor_coefficients() {
        // In degree one the coefficient of X_ρ collapses to z_ρ for any
        // inner product.
        let fan = first_quadrant();
        let z = ZValue::from_pairs([("1", Rat::frac(5, 3)), ("2", Rat::from_int(-2))]);
        for ip in [dot2(), skew_inner_product()] {
            let e = squarefree_expand(&fan, &ip, &[&z]).unwrap();
            assert_eq!(e.coefficient(&Cone::from_ids(["1"])), Some(&Rat::frac(5, 3)));
            assert_eq!(
                e.coefficient(&Cone::from_ids(["2"])),
                Some(&Rat::from_int(-2))
            );
        }
    }

    #[test]
    fn top_degree_coefficient_matches_cone_volume() {
        // For the (unbalanced) single-cone fan no degree map exists, but
        // the top-degree expansion coefficient is still the polytope
        // volume of the cone.
        let fan = first_quadrant();
        let z = quadrant_z22();
        let cone = Cone::from_ids(["1", "2"]);
        let e_dot = squarefree_expand(&fan, &dot2(), &[&z, &z]).unwrap();
        assert_eq!(e_dot.coefficient(&cone), Some(&Rat::from_int(8)));
        let e_skew = squarefree_expand(&fan, &skew_inner_product(), &[&z, &z]).unwrap();
        assert_eq!(e_skew.coefficient(&cone), Some(&Rat::from_int(5)));
    }

    #[test]
    fn expansion_rejects_degrees_beyond_the_fan_dimension() {
        let fan = first_quadrant();
        let z = quadrant_z22();
        assert!(matches!(
            squarefree_expand(&fan, &dot2(), &[&z, &z, &z]),
            Err(ChowError::Fan(FanError::BadDimension { .. }))
        ));
    }

    #[test]
    fn degree_map_requires_balancing() {
        let fan = first_quadrant();
        let z = quadrant_z22();
        let e = squarefree_expand(&fan, &dot2(), &[&z, &z]).unwrap();
        assert!(matches!(
            degree(&fan, &ones(&fan), &e),
            Err(ChowError::NotBalanced { .. })
        ));
    }

    #[test]
    fn degree_map_rejects_lower_degree_elements() {
        let fan = hexagon_fan();
        let z = hexagon_cut_z();
        let e = squarefree_expand(&fan, &dot2(), &[&z]).unwrap();
        assert!(matches!(
            degree(&fan, &ones(&fan), &e),
            Err(ChowError::NotTopDegree {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn hexagon_volume_polynomial_matches_normal_complex() {
        let fan = hexagon_fan();
        let z = hexagon_cut_z();
        let vol = volume_polynomial_eval(&fan, &ones(&fan), &dot2(), &z).unwrap();
        assert_eq!(vol, Rat::frac(131, 4));
        assert_eq!(
            vol,
            complex_volume(&fan, &ones(&fan), &dot2(), &z).unwrap()
        );
    }

    fn expected_hexagon_polynomial() -> MultiPoly {
        // 2(z0·z01 + z0·z02 + z1·z01 + z1·z12 + z2·z02 + z2·z12)
        //   − (z0² + z1² + z2² + z01² + z02² + z12²)
        let cross = [
            ("0", "01"),
            ("0", "02"),
            ("1", "01"),
            ("1", "12"),
            ("2", "02"),
            ("2", "12"),
        ];
        let mut p = MultiPoly::zero();
        for (a, b) in cross {
            p = p.add(&MultiPoly::var(a).mul(&MultiPoly::var(b)).scale(&Rat::from_int(2)));
        }
        for v in ["0", "1", "2", "01", "02", "12"] {
            p = p.sub(&MultiPoly::var(v).mul(&MultiPoly::var(v)));
        }
        p
    }

    #[test]
    fn hexagon_symbolic_polynomial_has_expected_coefficients() {
        let fan = hexagon_fan();
        let p = volume_polynomial_symbolic(&fan, &ones(&fan), &dot2()).unwrap();
        assert_eq!(p, expected_hexagon_polynomial());
        assert!(p.is_homogeneous(2));
        assert_eq!(p.eval(&hexagon_cut_z()).unwrap(), Rat::frac(131, 4));
    }

    #[test]
    fn symbolic_polynomial_is_independent_of_the_inner_product() {
        // The expansion coefficients differ wildly between the two inner
        // products, but the degree map collapses them to the same
        // polynomial.
        let fan = hexagon_fan();
        let p_dot = volume_polynomial_symbolic(&fan, &ones(&fan), &dot2()).unwrap();
        let p_skew =
            volume_polynomial_symbolic(&fan, &ones(&fan), &skew_inner_product()).unwrap();
        assert_eq!(p_dot, p_skew);
    }

    #[test]
    fn evaluation_agrees_with_symbolic_everywhere() {
        // Including at values that are far from pseudo-cubical.
        let fan = hexagon_fan();
        let w = ones(&fan);
        let p = volume_polynomial_symbolic(&fan, &w, &dot2()).unwrap();
        let mut rng = crate::rng::SplitMix64::new(0xC40);
        for _ in 0..25 {
            let z = ZValue::new(
                fan.rays()
                    .keys()
                    .map(|id| (id.clone(), Rat::from_int(rng.next_int(-10, 10))))
                    .collect(),
            );
            assert_eq!(
                volume_polynomial_eval(&fan, &w, &dot2(), &z).unwrap(),
                p.eval(&z).unwrap()
            );
        }
    }

    #[test]
    fn mixed_degrees_are_symmetric_and_multilinear() {
        let fan = hexagon_fan();
        let w = ones(&fan);
        let ip = dot2();
        let za = hexagon_cut_z();
        let zb = ZValue::new(
            fan.rays()
                .keys()
                .map(|id| (id.clone(), Rat::one()))
                .collect(),
        );
        let ab = mixed_degree(&fan, &w, &ip, &[&za, &zb]).unwrap();
        let ba = mixed_degree(&fan, &w, &ip, &[&zb, &za]).unwrap();
        assert_eq!(ab, ba);

        // Polarization: 2·deg(D(a)D(b)) = Vol(a+b) − Vol(a) − Vol(b).
        let vol_sum = volume_polynomial_eval(&fan, &w, &ip, &za.add(&zb)).unwrap();
        let vol_a = volume_polynomial_eval(&fan, &w, &ip, &za).unwrap();
        let vol_b = volume_polynomial_eval(&fan, &w, &ip, &zb).unwrap();
        assert_eq!(&ab * &Rat::from_int(2), vol_sum - vol_a - vol_b);

        // Linearity in one slot: deg(D(a)D(b + 3a)) expands.
        let zc = zb.add(&za.scale(&Rat::from_int(3)));
        let ac = mixed_degree(&fan, &w, &ip, &[&za, &zc]).unwrap();
        let aa = mixed_degree(&fan, &w, &ip, &[&za, &za]).unwrap();
        assert_eq!(ac, &ab + &(&aa * &Rat::from_int(3)));
    }

    #[test]
    fn verify_identity_on_cubical_values() {
        let fan = hexagon_fan();
        let report = verify_volume_identity(&fan, &ones(&fan), &dot2(), &hexagon_cut_z()).unwrap();
        assert_eq!(report.cubicality, "cubical");
        assert_eq!(report.witness, None);
        assert_eq!(report.tight_pairs, 0);
        assert_eq!(report.chow_volume, Rat::frac(131, 4));
        assert_eq!(report.normal_complex_volume, Some(Rat::frac(131, 4)));
        assert_eq!(report.identity_holds, Some(true));
    }

    #[test]
    fn verify_identity_on_noncomplete_balanced_fan() {
        let fan = balanced_r3_fan();
        let ip = InnerProduct::standard_dot(3);
        let report =
            verify_volume_identity(&fan, &ones(&fan), &ip, &balanced_r3_cut_z()).unwrap();
        assert_eq!(report.cubicality, "cubical");
        assert_eq!(report.identity_holds, Some(true));

        // The fan is two-dimensional even though it lives in 3-space.
        let p = volume_polynomial_symbolic(&fan, &ones(&fan), &ip).unwrap();
        assert!(p.is_homogeneous(2));
        assert_eq!(
            p.eval(&balanced_r3_cut_z()).unwrap(),
            report.chow_volume
        );
    }

    #[test]
    fn verify_reports_non_pseudo_cubical_values_without_comparing() {
        let fan = hexagon_fan();
        let mut z = hexagon_cut_z();
        z.insert("0", Rat::from_int(-5));
        let report = verify_volume_identity(&fan, &ones(&fan), &dot2(), &z).unwrap();
        assert_eq!(report.cubicality, "neither");
        assert!(report.witness.is_some());
        assert_eq!(report.normal_complex_volume, None);
        assert_eq!(report.identity_holds, None);
    }

    #[test]
    fn verify_errors_on_unbalanced_fans() {
        let fan = first_quadrant();
        assert!(matches!(
            verify_volume_identity(&fan, &ones(&fan), &dot2(), &quadrant_z22()),
            Err(ChowError::NotBalanced { .. })
        ));
    }

    #[test]
    fn expansion_json_lists_every_cone_of_that_degree() {
        let fan = hexagon_fan();
        let z = hexagon_cut_z();
        let e = squarefree_expand(&fan, &dot2(), &[&z]).unwrap();
        assert_eq!(e.iter().count(), 6);
        let text = e.to_json();
        assert!(text.contains("\"degree\": 1"));
        assert!(text.contains("\"01\""));
    }
}
