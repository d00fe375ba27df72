use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use cosym_core::constructions::{
    build_scenario, cn_example, level_set_structure, mapping_torus, registry, sphere_mapping_torus,
    MappingTorusSpec, Parametrization,
};
use cosym_core::geometry::{
    classify_structure, reeb_field, verify_closed, Axis, ChartedManifold, DEFAULT_TOL_CLOSED,
};
use cosym_core::numeric::{MatrixField, PointMap};
use cosym_core::tensor_point::{
    kernel_basis, subspace_relation, SubspaceBasis, SubspaceRelation, DEFAULT_TOL_RANK,
};
use cosym_core::{Error, Verdict};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn plane(count: usize) -> ChartedManifold {
    ChartedManifold::new(vec![
        Axis::interval("x", -1.0, 1.0, count),
        Axis::interval("y", -1.0, 1.0, count),
    ])
    .unwrap()
}

fn area() -> MatrixField {
    Arc::new(|_x: &[f64]| DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]))
}

fn classify(s: &cosym_core::constructions::Scenario) -> Verdict {
    classify_structure(&s.manifold, &s.forms, DEFAULT_TOL_RANK, DEFAULT_TOL_CLOSED)
        .unwrap()
        .verdict
}

#[test]
fn trivial_mapping_torus_of_the_plane() {
    let id: PointMap = Arc::new(|x: &[f64]| x.to_vec());
    let spec = MappingTorusSpec::new("plane_id", plane(5), area(), id).unwrap();
    let s = mapping_torus(&spec).unwrap();
    assert_eq!(s.dim(), 3);
    assert_eq!(classify(&s), Verdict::Cosymplectic { n: 1 });
    let x = [0.2, -0.3, 0.4];
    assert_eq!(
        s.forms.omega(&x),
        DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    );
    let reeb = reeb_field(&s.forms, &x, DEFAULT_TOL_RANK).unwrap();
    assert!((reeb - DVector::from_column_slice(&[0.0, 0.0, 1.0])).amax() < 1e-12);
    assert!(s.manifold.periods()[2] == Some(1.0));
}

#[test]
fn half_turn_mapping_torus_is_seam_consistent() {
    let phi: PointMap = Arc::new(|x: &[f64]| {
        let (c, s) = (PI.cos(), PI.sin());
        vec![c * x[0] - s * x[1], s * x[0] + c * x[1]]
    });
    let spec = MappingTorusSpec::new("plane_half_turn", plane(7), area(), phi).unwrap();
    let s = mapping_torus(&spec).unwrap();
    assert!(s.diagnostics["seam_residual"] <= 1e-8);
    assert!(s.diagnostics["symplectomorphism_residual"] <= 1e-8);
    assert_eq!(classify(&s), Verdict::Cosymplectic { n: 1 });
}

#[test]
fn area_doubling_monodromy_is_rejected() {
    let phi: PointMap = Arc::new(|x: &[f64]| vec![2.0 * x[0], x[1]]);
    let mut spec = MappingTorusSpec::new("stretch", plane(5), area(), phi).unwrap();
    assert!((spec.check() - 1.0).abs() < 1e-6);
    assert!(!spec.phi_checked());
    match mapping_torus(&spec) {
        Err(Error::NotSymplectomorphism(r)) => assert!((r - 1.0).abs() < 1e-6),
        other => panic!("expected NotSymplectomorphism, got {other:?}"),
    }
}

#[test]
fn odd_base_is_rejected() {
    let line = ChartedManifold::new(vec![Axis::interval("x", -1.0, 1.0, 5)]).unwrap();
    let id: PointMap = Arc::new(|x: &[f64]| x.to_vec());
    let form: MatrixField = Arc::new(|_x: &[f64]| DMatrix::zeros(1, 1));
    assert!(matches!(
        MappingTorusSpec::new("line", line, form, id),
        Err(Error::OddBaseDim(1))
    ));
}

#[test]
fn registry_mapping_tori_are_cosymplectic() {
    for name in [
        "mapping_torus_id",
        "mapping_torus_rot(1/2)",
        "mapping_torus_rot(golden)",
    ] {
        let s = build_scenario(name).unwrap();
        let closed = verify_closed(&s.manifold, &s.forms, s.manifold.default_step()).unwrap();
        assert!(closed.passes(DEFAULT_TOL_CLOSED));
        let n = (s.dim() - 1) / 2;
        assert_eq!(classify(&s), Verdict::Cosymplectic { n }, "{name}");
        assert!(s.diagnostics["seam_residual"] <= 1e-8, "{name}");
        assert!(s.diagnostics["equivariance_residual"] <= 1e-8, "{name}");
    }
}

fn y0_param() -> Parametrization {
    let chart = ChartedManifold::new(vec![
        Axis::circle("alpha", TAU, 6),
        Axis::interval("x2", -1.5, 1.5, 5),
        Axis::interval("y2", -1.5, 1.5, 5),
        Axis::circle("theta", 1.0, 4),
    ])
    .unwrap();
    Parametrization {
        chart,
        map: Arc::new(|u: &[f64]| vec![u[0].cos(), u[0].sin(), u[1], u[2], u[3]]),
        inverse: None,
    }
}

#[test]
fn level_set_of_the_first_factor_is_precosymplectic() {
    let ambient = build_scenario("mapping_torus_id").unwrap();
    let param = y0_param();
    let s = level_set_structure(&ambient, &[vec![1, 0]], &param).unwrap();
    assert_eq!(classify(&s), Verdict::Precosymplectic { r: 1 });
    assert!(s.diagnostics["level_set_residual"] <= 1e-12);

    let x = [0.7, 0.3, -0.2, 0.5];
    let ker = kernel_basis(&s.forms.flat(&x), DEFAULT_TOL_RANK);
    let expected = SubspaceBasis::standard(4, &[0]);
    assert_eq!(
        subspace_relation(&ker, &expected, 1e-8).unwrap(),
        SubspaceRelation::Equal
    );
}

#[test]
fn level_set_forms_are_the_pullbacks() {
    let ambient = build_scenario("mapping_torus_id").unwrap();
    let param = y0_param();
    let s = level_set_structure(&ambient, &[vec![1, 0]], &param).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let u = param.chart.random_point(&mut r);
        // Hand-written Jacobian of (α, x₂, y₂, θ) ↦ (cos α, sin α, x₂, y₂, θ).
        let mut j = DMatrix::zeros(5, 4);
        j[(0, 0)] = -u[0].sin();
        j[(1, 0)] = u[0].cos();
        j[(2, 1)] = 1.0;
        j[(3, 2)] = 1.0;
        j[(4, 3)] = 1.0;
        let x = (param.map)(&u);
        let a = DVector::from_fn(4, |_, _| r.random_range(-1.0..1.0));
        let b = DVector::from_fn(4, |_, _| r.random_range(-1.0..1.0));
        let lhs = (a.transpose() * s.forms.omega(&u) * &b)[(0, 0)];
        let rhs = ((&j * &a).transpose() * ambient.forms.omega(&x) * (&j * &b))[(0, 0)];
        assert!((lhs - rhs).abs() <= 1e-9, "{lhs} vs {rhs}");
        let eta_lhs = s.forms.eta(&u).dot(&a);
        let eta_rhs = ambient.forms.eta(&x).dot(&(&j * &a));
        assert!((eta_lhs - eta_rhs).abs() <= 1e-9);
    }
}

#[test]
fn empty_subtorus_reparametrizes_the_ambient_space() {
    let ambient = build_scenario("mapping_torus_id").unwrap();
    let param = Parametrization {
        chart: ambient.manifold.clone(),
        map: Arc::new(|u: &[f64]| u.to_vec()),
        inverse: Some(Arc::new(|x: &[f64]| x.to_vec())),
    };
    let s = level_set_structure(&ambient, &[], &param).unwrap();
    let x = [0.3, -0.4, 0.5, 0.1, 0.6];
    assert!((s.forms.omega(&x) - ambient.forms.omega(&x)).amax() < 1e-9);
    assert!((s.forms.eta(&x) - ambient.forms.eta(&x)).amax() < 1e-9);
    let a = s.action().unwrap();
    assert_eq!(a.moment_dim(), 2);
    let mu = a.moment(&x).unwrap();
    let mu_amb = ambient.action().unwrap().moment(&x).unwrap();
    assert!((mu - mu_amb).amax() < 1e-12);
}

#[test]
fn level_set_errors() {
    let ambient = build_scenario("mapping_torus_id").unwrap();
    let mut off = y0_param();
    off.map = Arc::new(|u: &[f64]| vec![1.2 * u[0].cos(), 1.2 * u[0].sin(), u[1], u[2], u[3]]);
    assert!(matches!(
        level_set_structure(&ambient, &[vec![1, 0]], &off),
        Err(Error::NotInLevelSet { .. })
    ));

    let mut flat = y0_param();
    flat.map = Arc::new(|u: &[f64]| vec![u[0].cos(), u[0].sin(), u[1], u[1], u[3]]);
    assert!(matches!(
        level_set_structure(&ambient, &[vec![1, 0]], &flat),
        Err(Error::ParamNotImmersion(_))
    ));
}

#[test]
fn y0_residual_action_and_moment_map() {
    let s = build_scenario("y0_halfturn").unwrap();
    assert_eq!(classify(&s), Verdict::Precosymplectic { r: 1 });
    let a = s.action().unwrap();
    assert_eq!(a.moment_dim(), 1);
    let mu = a.moment(&[0.4, 0.6, 0.8, 0.3]).unwrap();
    assert!((mu[0] - (0.36 + 0.64 - 1.0)).abs() < 1e-12);
}

#[test]
fn cn_classification_and_kernel() {
    for (n, k) in [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)] {
        let mut s = cn_example(n, k).unwrap();
        if n - k == 3 {
            // Three full ℂ factors are ~10⁶ grid points; five samples per axis keep the same coverage shape.
            let counts: Vec<usize> = s.manifold.grid_counts().iter().map(|&c| c.min(5)).collect();
            s.manifold = s.manifold.with_grid_counts(&counts).unwrap();
        }
        let c = classify_structure(&s.manifold, &s.forms, DEFAULT_TOL_RANK, DEFAULT_TOL_CLOSED)
            .unwrap();
        let expected = if k == 0 {
            Verdict::Cosymplectic { n }
        } else {
            Verdict::Precosymplectic { r: n - k }
        };
        assert_eq!(c.verdict, expected, "cn({n},{k})");
        assert_eq!(c.rank_of_flat, 2 * (n - k) + 1);
        for p in s.manifold.grid().thinned(200) {
            let ker = kernel_basis(&s.forms.flat(&p.coords), DEFAULT_TOL_RANK);
            let alphas: Vec<usize> = (0..k).collect();
            let rel =
                subspace_relation(&ker, &SubspaceBasis::standard(s.dim(), &alphas), 1e-8).unwrap();
            assert_eq!(rel, SubspaceRelation::Equal);
        }
    }
}

#[test]
fn cn_out_of_range() {
    for (n, k) in [(2, 2), (0, 0), (4, 1)] {
        assert!(
            matches!(cn_example(n, k), Err(Error::OutOfRange(_))),
            "cn({n},{k})"
        );
    }
}

#[test]
fn sphere_chart() {
    let s = sphere_mapping_torus([16, 9, 4]).unwrap();
    assert_eq!(classify(&s), Verdict::Cosymplectic { n: 1 });
    let reeb = reeb_field(&s.forms, &[1.0, 0.3, 2.0], DEFAULT_TOL_RANK).unwrap();
    assert!((reeb - DVector::from_column_slice(&[0.0, 0.0, 1.0])).amax() < 1e-12);
}

#[test]
fn every_registry_entry_builds() {
    let examples = [
        "r3_standard",
        "r4_precosymplectic",
        "kernel_defect",
        "mapping_torus_id",
        "mapping_torus_rot(1/2)",
        "mapping_torus_rot(golden)",
        "cn(3,1)",
        "sphere_s1",
        "sphere_s1_pole(north)",
        "sphere_s1_pole(south)",
        "y0_halfturn",
    ];
    assert_eq!(registry().len(), examples.len() - 1);
    for name in examples {
        let s = build_scenario(name).unwrap();
        s.validate().unwrap();
    }
    assert!(matches!(build_scenario("cn(3, 1)"), Ok(s) if s.name == "cn(3,1)"));
    assert!(matches!(
        build_scenario("torus"),
        Err(Error::UnknownScenario(_))
    ));
    assert!(matches!(
        build_scenario("mapping_torus_rot(1/0)"),
        Err(Error::OutOfRange(_))
    ));
}
