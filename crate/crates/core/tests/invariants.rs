//! Randomized invariants over the whole catalog.

use nalgebra::DMatrix;
use parallax::manifolds::random_element;
use parallax::morphism::{sphere_automorphism, CandidatePair};
use parallax::sampling::{random_rotation, seeded};
use parallax::{catalog_keys, InnerProduct, ParallelizedManifold};
use rand::Rng;

const FRAME_SAMPLES: usize = 1_000_000;

fn all() -> Vec<ParallelizedManifold> {
    catalog_keys()
        .iter()
        .map(|k| ParallelizedManifold::from_key(k).unwrap())
        .collect()
}

#[test]
fn frame_is_tangent_and_full_rank_everywhere() {
    for pm in all() {
        let m = pm.manifold();
        let mut rng = seeded(1);
        let (mut normal, mut min_eig) = (0.0_f64, f64::INFINITY);
        for _ in 0..FRAME_SAMPLES {
            let s = m.random_point(&mut rng);
            let f = m.frame_on(s.ambient());
            for i in 0..pm.dim() {
                normal = normal.max(m.normal_residual(s.ambient(), &f.column(i).into_owned()));
            }
            let gram = f.transpose() * &f;
            min_eig = min_eig.min(gram.symmetric_eigenvalues().min());
        }
        assert!(normal <= 1e-12, "{}: normal component {normal:e}", pm.id());
        assert!(
            min_eig > 1e-6,
            "{}: smallest Gram eigenvalue {min_eig:e}",
            pm.id()
        );
    }
}

#[test]
fn sphere_circle_frame_is_orthonormal() {
    for key in ["sphere_circle2", "sphere_circle4"] {
        let pm = ParallelizedManifold::from_key(key).unwrap();
        let mut rng = seeded(2);
        for _ in 0..10_000 {
            let s = pm.manifold().random_point(&mut rng);
            let f = pm.frame(&s).unwrap();
            let gram = f.matrix().transpose() * f.matrix();
            let err = (gram - DMatrix::identity(pm.dim(), pm.dim())).amax();
            assert!(err <= 1e-12, "{key}: {err:e}");
        }
    }
}

#[test]
fn flow_reparametrization() {
    for pm in all() {
        let mut rng = seeded(3);
        for _ in 0..20 {
            let s = pm.manifold().random_point(&mut rng);
            let xi = random_element(pm.dim(), 1.0, &mut rng);
            let t = rng.random_range(-1.0..=1.0);
            let a = pm.flow_numeric(&xi.scale(2.5), &s, t).unwrap().endpoint;
            let b = pm.flow_numeric(&xi, &s, 2.5 * t).unwrap().endpoint;
            assert!(pm.distance(&a, &b) <= 1e-8, "{}", pm.id());
        }
    }
}

#[test]
fn fundamental_fields_have_constant_norm() {
    for pm in all() {
        let ip = InnerProduct::identity(pm.dim());
        let mut rng = seeded(4);
        for _ in 0..10 {
            let s = pm.manifold().random_point(&mut rng);
            let xi = random_element(pm.dim(), 1.0, &mut rng);
            let dir = random_element(pm.dim(), 1.0, &mut rng);
            let drift = pm
                .fundamental_norm_drift(&s, &xi, &dir, &[0.3, -0.7, 1.5], &ip)
                .unwrap();
            assert!(drift <= 1e-9, "{}: {drift:e}", pm.id());
        }
    }
}

#[test]
fn quotients_invert_products() {
    for pm in all() {
        let mut rng = seeded(5);
        let (mut right, mut loop_right, mut loop_left) = (0.0_f64, 0.0_f64, 0.0_f64);
        for _ in 0..100 {
            let s = pm.manifold().random_point(&mut rng);
            let xi = random_element(pm.dim(), 0.08, &mut rng);
            let eta = random_element(pm.dim(), 0.08, &mut rng);
            let solved = pm
                .right_quotient(&pm.product(&xi, &s).unwrap(), &s)
                .unwrap();
            right = right.max((solved.xi.coeffs() - xi.coeffs()).norm());
            let prod = pm.local_product(&eta, &xi, &s).unwrap();
            let back = pm.right_quotient_s(&prod, &xi, &s).unwrap();
            loop_right = loop_right.max((back.coeffs() - eta.coeffs()).norm());
            let prod = pm.local_product(&xi, &eta, &s).unwrap();
            let back = pm.left_quotient_s(&xi, &prod, &s).unwrap();
            loop_left = loop_left.max((back.coeffs() - eta.coeffs()).norm());
        }
        assert!(right <= 1e-8, "{}: p/s {right:e}", pm.id());
        assert!(loop_right <= 1e-8, "{}: /_s {loop_right:e}", pm.id());
        assert!(loop_left <= 1e-8, "{}: \\_s {loop_left:e}", pm.id());
    }
}

#[test]
fn local_product_is_not_commutative_on_sphere_circle() {
    let pm = ParallelizedManifold::from_key("sphere_circle2").unwrap();
    let s = pm.point(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    let xi = pm.element(&[0.0, 0.3, 0.0]).unwrap();
    let eta = pm.element(&[0.3, 0.0, 0.0]).unwrap();
    let ab = pm.local_product(&eta, &xi, &s).unwrap();
    let ba = pm.local_product(&xi, &eta, &s).unwrap();
    assert!((ab.coeffs() - ba.coeffs()).norm() > 1e-3);
}

#[test]
fn antipodal_angle_needs_several_steps() {
    let pm = ParallelizedManifold::from_key("sphere_circle2").unwrap();
    let s = pm.point(&[1.0, 0.0, 0.0, 0.0]).unwrap();
    let p = pm.point(&[1.0, 0.0, 0.0, std::f64::consts::PI]).unwrap();
    let steps = pm.factorize(&p, &s, 0.5).unwrap();
    assert!(steps.len() >= 2);
    assert!(pm.distance(&pm.reassemble(&steps, &s).unwrap(), &p) <= 1e-9);
}

#[test]
fn equal_embeddings_act_identically() {
    let pm = ParallelizedManifold::from_key("sphere_circle2").unwrap();
    let mut rng = seeded(6);
    let rotation = random_rotation(3, &mut rng);
    let shift = 1.1;
    let direct = sphere_automorphism(2, rotation.clone(), shift).unwrap();
    let half = sphere_automorphism(2, DMatrix::identity(3, 3), shift / 2.0).unwrap();
    let turned = sphere_automorphism(2, rotation, 0.0).unwrap();
    let staged: CandidatePair = half.compose(&turned).compose(&half);
    let s = pm.manifold().random_point(&mut rng);
    let (h1, s1) = pm
        .automorphism_embedding(&direct, &s, &[], f64::INFINITY)
        .unwrap();
    let (h2, s2) = pm
        .automorphism_embedding(&staged, &s, &[], f64::INFINITY)
        .unwrap();
    assert!((&h1 - &h2).amax() <= 1e-12 && pm.distance(&s1, &s2) <= 1e-12);
    for _ in 0..20 {
        let p = pm.manifold().random_point(&mut rng);
        let rebuilt = pm.reconstruct_from_embedding(&h1, &s1, &s, &p).unwrap();
        assert!(pm.distance(&rebuilt, &pm.apply_map(&direct, &p).unwrap()) <= 1e-8);
        assert!(pm.distance(&rebuilt, &pm.apply_map(&staged, &p).unwrap()) <= 1e-8);
    }
}
