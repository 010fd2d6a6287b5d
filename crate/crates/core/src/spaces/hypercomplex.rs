//! Hyper-Hermitian structures on `T⁴`-bundles over a hyperKähler base; the
//! chart is `(y_1, y_2, y_3, y_4, x)`.

use std::collections::BTreeMap;

use super::{assemble_metric, chart_domain, chart_names, dcoord, spn_residual, BaseLift, HKData, SpaceModel};
use crate::calculus::ScalarField;
use crate::error::{GeomError, Result};
use crate::exterior::{ComplexFormField, KFormField};

/// Which family of fibre connections is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypercomplexShape {
    /// Fibres `α, ξ, η, ν` with `dα = σ_1`, `dξ = −σ_2`, `dη = −σ_3` and one
    /// extra connection `ν`.
    Bundle,
    /// Fibres `ν_1, …, ν_4` whose curvatures all lie in `sp(n)`.
    Instanton,
}

/// Tolerance for the `sp(n)` membership test of curvature forms.
const SPN_TOLERANCE: f64 = 1e-9;

/// Build a hypercomplex model from potentials of the extra connections.
///
/// Each potential is a 1-form `A` on the base; the connection is `dy + A`
/// and its curvature `dA` must lie in `sp(n)`.
pub fn build_hypercomplex(base: &HKData, potentials: &[KFormField], shape: HypercomplexShape) -> Result<SpaceModel> {
    check_count(potentials, shape)?;
    let pts = base.check_points();
    for (i, a) in potentials.iter().enumerate() {
        let w = spn_residual(base, &a.d()?, &pts)?;
        if w.value > SPN_TOLERANCE {
            return Err(GeomError::Construction(format!(
                "curvature of connection {} is not in sp(n): residual {:e} at {:?}",
                i + 1,
                w.value,
                w.point
            )));
        }
    }
    build_hypercomplex_unchecked(base, potentials, shape)
}

fn check_count(potentials: &[KFormField], shape: HypercomplexShape) -> Result<()> {
    let ok = match shape {
        HypercomplexShape::Bundle => potentials.len() == 1,
        HypercomplexShape::Instanton => (1..=4).contains(&potentials.len()),
    };
    if !ok {
        return Err(GeomError::Argument(format!(
            "{} connection potentials given for the {shape:?} shape",
            potentials.len()
        )));
    }
    Ok(())
}

fn complex(re: &KFormField, im: &KFormField) -> Result<ComplexFormField> {
    ComplexFormField::new(re.clone(), im.clone())
}

/// As [`build_hypercomplex`] without the curvature hypothesis; used to study
/// what fails when it is violated.
pub fn build_hypercomplex_unchecked(
    base: &HKData,
    potentials: &[KFormField],
    shape: HypercomplexShape,
) -> Result<SpaceModel> {
    check_count(potentials, shape)?;
    if potentials.iter().any(|a| a.dim() != base.dim() || a.degree() != 1) {
        return Err(GeomError::Argument("potentials must be 1-forms on the base".into()));
    }
    let dim = 4 + base.dim();
    let lift = BaseLift::new(dim, 4, base.dim())?;
    let conn = |i: usize, a: Option<&KFormField>, sign: f64| -> Result<KFormField> {
        let dy = dcoord(i, dim)?;
        match a {
            Some(a) => dy.add(&lift.form(a)?.scale_f64(sign)),
            None => Ok(dy),
        }
    };
    let (fibre, names): (Vec<KFormField>, [&str; 4]) = match shape {
        HypercomplexShape::Bundle => {
            let k = base.kappa()?;
            (
                vec![
                    conn(0, Some(&k[0]), 1.0)?,
                    conn(1, Some(&k[1]), -1.0)?,
                    conn(2, Some(&k[2]), -1.0)?,
                    conn(3, Some(&potentials[0]), 1.0)?,
                ],
                ["alpha", "xi", "eta", "nu"],
            )
        }
        HypercomplexShape::Instanton => (
            (0..4).map(|i| conn(i, potentials.get(i), 1.0)).collect::<Result<_>>()?,
            ["nu1", "nu2", "nu3", "nu4"],
        ),
    };
    let sigma: Vec<KFormField> = base.sigma.iter().map(|s| lift.form(s)).collect::<Result<_>>()?;
    // (a, b, c, d) with ω̌_i = σ_i + a∧b + c∧d
    let pairs: [[usize; 4]; 3] = match shape {
        // α, ξ, η, ν = 0, 1, 2, 3
        HypercomplexShape::Bundle => [[1, 2, 3, 0], [1, 3, 0, 2], [1, 0, 2, 3]],
        HypercomplexShape::Instanton => [[0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2]],
    };
    let mut forms = BTreeMap::new();
    let mut complex_forms = BTreeMap::new();
    for (i, s) in sigma.iter().enumerate() {
        forms.insert(format!("sigma{}", i + 1), s.clone());
    }
    for (f, n) in fibre.iter().zip(names) {
        forms.insert(n.to_string(), f.clone());
    }
    let n = base.n();
    for (i, [a, b, c, d]) in pairs.into_iter().enumerate() {
        let w = sigma[i]
            .add(&fibre[a].wedge(&fibre[b])?)?
            .add(&fibre[c].wedge(&fibre[d])?)?;
        forms.insert(format!("omega{}", i + 1), w);
        let s = complex(&sigma[(i + 1) % 3], &sigma[(i + 2) % 3])?.power(n)?;
        let ups = s.wedge(&complex(&fibre[a], &fibre[b])?)?.wedge(&complex(&fibre[c], &fibre[d])?)?;
        complex_forms.insert(format!("upsilon{}", i + 1), ups);
    }
    let squares = fibre.iter().map(|f| (ScalarField::constant(1.0, dim), f.clone())).collect();
    let metric = assemble_metric(dim, Some((ScalarField::constant(1.0, dim), lift.metric(&base.g)?)), squares)?;
    let label = match shape {
        HypercomplexShape::Bundle => "M_(alpha,xi,eta,nu)",
        HypercomplexShape::Instanton => "M_(nu1,nu2,nu3,nu4)",
    };
    Ok(SpaceModel {
        name: format!("{label}^{dim} over {}", base.label),
        coords: chart_names(&["y1", "y2", "y3", "y4"], base),
        metric,
        forms,
        complex_forms,
        expected: BTreeMap::new(),
        profile: None,
        base: Some(base.clone()),
        base_offset: 4,
        domain: chart_domain(vec![-1.0; 4], vec![1.0; 4], base)?,
    })
}
