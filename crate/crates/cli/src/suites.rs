//! Seeded invariant suites run by `parallax verify`.

use clap::ValueEnum;
use nalgebra::{DMatrix, DVector};
use parallax::geometry::QField;
use parallax::manifolds::Block;
use parallax::morphism::{
    s3_left_multiplication, sphere_automorphism, sphere_product_automorphism, torus_translation,
    CandidatePair,
};
use parallax::sampling::{random_element, random_rotation, seeded};
use parallax::{AlgebraElement, InnerProduct, ParallelizedManifold, Point, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::report::CheckRecord;

/// Trust radius for companions `h(s)/s`, which can be far from `0`.
pub const COMPANION_TRUST_RADIUS: f64 = 10.0;

/// Trust radius used by the factorization check.
pub const FACTOR_TRUST_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Flows,
    Loops,
    Algebra,
    Geometry,
    Lts,
    Morphisms,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Flows => "flows",
            Suite::Loops => "loops",
            Suite::Algebra => "algebra",
            Suite::Geometry => "geometry",
            Suite::Lts => "lts",
            Suite::Morphisms => "morphisms",
            Suite::All => "all",
        }
    }
}

struct Runner<'a> {
    pm: &'a ParallelizedManifold,
    samples: usize,
    seed: u64,
    next_stream: u64,
    records: Vec<CheckRecord>,
}

impl<'a> Runner<'a> {
    /// Runs one check over `count` samples with its own random stream.
    fn check(
        &mut self,
        name: &str,
        tolerance: f64,
        count: usize,
        mut sample: impl FnMut(&ParallelizedManifold, &mut ChaCha8Rng) -> Result<f64>,
    ) {
        self.next_stream += 1;
        let mut rng = seeded(
            self.seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(self.next_stream),
        );
        let mut worst: f64 = 0.0;
        let mut error = None;
        for _ in 0..count {
            match sample(self.pm, &mut rng) {
                Ok(r) if r.is_nan() => {
                    worst = f64::NAN;
                    break;
                }
                Ok(r) => worst = worst.max(r),
                Err(e) => {
                    error = Some(e.to_string());
                    worst = f64::INFINITY;
                    break;
                }
            }
        }
        self.records.push(CheckRecord {
            name: name.to_string(),
            max_residual: worst,
            tolerance,
            samples: count,
            error,
        });
    }
}

pub fn run(pm: &ParallelizedManifold, suite: Suite, samples: usize, seed: u64) -> Vec<CheckRecord> {
    let mut r = Runner {
        pm,
        samples,
        seed,
        next_stream: 0,
        records: Vec::new(),
    };
    let all = suite == Suite::All;
    if all || suite == Suite::Flows {
        flows(&mut r);
    }
    if all || suite == Suite::Loops {
        loops(&mut r);
    }
    if all || suite == Suite::Algebra {
        algebra(&mut r);
    }
    if all || suite == Suite::Geometry {
        geometry(&mut r);
    }
    if all || suite == Suite::Lts {
        lts(&mut r);
    }
    if all || suite == Suite::Morphisms {
        morphisms(&mut r);
    }
    r.records
}

fn point(pm: &ParallelizedManifold, rng: &mut ChaCha8Rng) -> Point {
    pm.manifold().random_point(rng)
}

fn element(pm: &ParallelizedManifold, scale: f64, rng: &mut ChaCha8Rng) -> AlgebraElement {
    random_element(pm.dim(), scale, rng)
}

/// Coefficients uniform in a cube inscribed in the ball of the given radius.
fn ball_element(pm: &ParallelizedManifold, radius: f64, rng: &mut ChaCha8Rng) -> AlgebraElement {
    element(pm, radius / (pm.dim() as f64).sqrt(), rng)
}

fn unit_element(pm: &ParallelizedManifold, rng: &mut ChaCha8Rng) -> AlgebraElement {
    loop {
        let e = element(pm, 1.0, rng);
        if e.norm() > 1e-3 {
            return e.scale(1.0 / e.norm());
        }
    }
}

fn diff(a: &AlgebraElement, b: &AlgebraElement) -> f64 {
    (a.coeffs() - b.coeffs()).norm()
}

fn has_closed_flow(pm: &ParallelizedManifold) -> bool {
    let s = pm.manifold().random_point(&mut seeded(0));
    matches!(pm.closed_form_flow(&pm.basis(0), &s, 1.0), Ok(Some(_)))
}

fn has_closed_associator(pm: &ParallelizedManifold) -> bool {
    let s = pm.manifold().random_point(&mut seeded(0));
    let e = pm.basis(0);
    matches!(pm.skew_associator_closed(&s, &e, &e, &e), Ok(Some(_)))
}

fn flows(r: &mut Runner) {
    let tol = *r.pm.tolerances();
    let n = r.samples;
    r.check("frame_tangency", tol.check_tol_analytic, n, |pm, rng| {
        let s = point(pm, rng);
        let f = pm.frame(&s)?;
        Ok((0..pm.dim())
            .map(|i| pm.manifold().normal_residual(s.ambient(), &f.column(i)))
            .fold(0.0, f64::max))
    });
    if has_closed_flow(r.pm) {
        r.check("flow_closed_form_vs_numeric", 1e-8, n, |pm, rng| {
            let s = point(pm, rng);
            let xi = element(pm, 1.0, rng);
            let t = rng.random_range(-3.0..=3.0);
            let closed = pm
                .closed_form_flow(&xi, &s, t)?
                .expect("closed form present");
            Ok(pm.distance(&pm.flow_numeric(&xi, &s, t)?.endpoint, &closed))
        });
        r.check("closed_form_flow_ode", tol.check_tol_fd2, n, |pm, rng| {
            let s = point(pm, rng);
            let xi = element(pm, 1.0, rng);
            let t = rng.random_range(-3.0..=3.0);
            let h = tol.fd_step_2;
            let m = pm.manifold();
            let at = |u: f64| {
                m.closed_form_flow(xi.coeffs(), s.ambient(), u)
                    .expect("closed form present")
            };
            let velocity = (at(t + h) - at(t - h)) / (2.0 * h);
            let p = m.normalize_point(&at(t))?;
            Ok((velocity - pm.fundamental_field(&xi, &p)?).amax())
        });
    }
    r.check("one_parameter_law", 1e-8, n, |pm, rng| {
        let s = point(pm, rng);
        let xi = element(pm, 1.0, rng);
        let (t1, t2) = (rng.random_range(-1.5..=1.5), rng.random_range(-1.5..=1.5));
        let inner = pm.product(&xi.scale(t2), &s)?;
        Ok(pm.distance(
            &pm.product(&xi.scale(t1), &inner)?,
            &pm.product(&xi.scale(t1 + t2), &s)?,
        ))
    });
    r.check(
        "left_translation_round_trip",
        10.0 * tol.point_tol,
        n,
        |pm, rng| {
            let s = point(pm, rng);
            let xi = element(pm, 1.5, rng);
            let back = pm.left_translate_inverse(&xi, &pm.left_translate(&xi, &s)?)?;
            Ok(pm.distance(&back, &s))
        },
    );
}

fn loops(r: &mut Runner) {
    let n = r.samples;
    r.check("quotient_round_trip", 1e-8, n, |pm, rng| {
        let s = point(pm, rng);
        let xi = ball_element(pm, 0.4, rng);
        Ok(diff(&pm.right_quotient(&pm.product(&xi, &s)?, &s)?.xi, &xi))
    });
    r.check("loop_two_sided_identity", 1e-9, n, |pm, rng| {
        let s = point(pm, rng);
        let xi = ball_element(pm, 0.3, rng);
        let zero = AlgebraElement::zero(pm.dim());
        Ok(diff(&pm.local_product(&zero, &xi, &s)?, &xi)
            .max(diff(&pm.local_product(&xi, &zero, &s)?, &xi)))
    });
    r.check("power_associativity", 1e-9, n, |pm, rng| {
        let s = point(pm, rng);
        let xi = ball_element(pm, 0.2, rng);
        let (a, b) = (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
        Ok(diff(
            &pm.local_product(&xi.scale(a), &xi.scale(b), &s)?,
            &xi.scale(a + b),
        ))
    });
    r.check("loop_right_division", 1e-8, n, |pm, rng| {
        let s = point(pm, rng);
        let (xi, eta) = (ball_element(pm, 0.15, rng), ball_element(pm, 0.15, rng));
        Ok(diff(
            &pm.local_product(&pm.right_quotient_s(&xi, &eta, &s)?, &eta, &s)?,
            &xi,
        ))
    });
    r.check("loop_left_division", 1e-8, n, |pm, rng| {
        let s = point(pm, rng);
        let (xi, eta) = (ball_element(pm, 0.15, rng), ball_element(pm, 0.15, rng));
        Ok(diff(
            &pm.local_product(&xi, &pm.left_quotient_s(&xi, &eta, &s)?, &s)?,
            &eta,
        ))
    });
    r.check("factorization_reassembly", 1e-8, n, |pm, rng| {
        let (p, s) = (point(pm, rng), point(pm, rng));
        let steps = pm.factorize(&p, &s, FACTOR_TRUST_RADIUS)?;
        Ok(pm.distance(&pm.reassemble(&steps, &s)?, &p))
    });
}

fn algebra(r: &mut Runner) {
    let tol = *r.pm.tolerances();
    let n = r.samples;
    let dim = r.pm.dim();
    let basis = |pm: &ParallelizedManifold| (0..pm.dim()).map(|i| pm.basis(i)).collect::<Vec<_>>();
    r.check("bracket_antisymmetry", 1e-12, n, |pm, rng| {
        Ok(pm.bracket_tensor(&point(pm, rng))?.antisymmetry_residual())
    });
    r.check(
        "bracket_ambient_fd_agreement",
        tol.check_tol_fd2,
        n,
        |pm, rng| {
            let s = point(pm, rng);
            let (xi, eta) = (element(pm, 1.0, rng), element(pm, 1.0, rng));
            Ok(diff(
                &pm.bracket(&s, &xi, &eta)?,
                &pm.bracket_fd(&s, &xi, &eta)?,
            ))
        },
    );
    r.check(
        "bracket_loop_commutator_agreement",
        tol.check_tol_fd2,
        n,
        |pm, rng| {
            let s = point(pm, rng);
            let (xi, eta) = (element(pm, 1.0, rng), element(pm, 1.0, rng));
            Ok(diff(
                &pm.bracket(&s, &xi, &eta)?,
                &pm.bracket_via_commutator(&s, &xi, &eta)?,
            ))
        },
    );
    r.check("structure_equation", tol.check_tol_fd2, n, |pm, rng| {
        let s = point(pm, rng);
        let (xi, eta) = (element(pm, 1.0, rng), element(pm, 1.0, rng));
        Ok(pm.structure_equation_residual(&s, &xi, &eta)?.norm())
    });
    r.check("jacobi", tol.check_tol_analytic, n, |pm, rng| {
        let s = point(pm, rng);
        let e = basis(pm);
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    worst = worst.max(pm.jacobi_residual(&s, &e[i], &e[j], &e[k])?.norm());
                }
            }
        }
        Ok(worst)
    });
    r.check("generalized_jacobi", tol.check_tol_fd2, n, |pm, rng| {
        let s = point(pm, rng);
        let e = basis(pm);
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    worst = worst.max(
                        pm.generalized_jacobi_residual(&s, &e[i], &e[j], &e[k])?
                            .norm(),
                    );
                }
            }
        }
        Ok(worst)
    });
    r.check(
        "associator_bracket_skew_part",
        tol.check_tol_fd3,
        n,
        |pm, rng| {
            let s = point(pm, rng);
            let (xi, eta, gamma) = (
                unit_element(pm, rng),
                unit_element(pm, rng),
                unit_element(pm, rng),
            );
            let skew = pm.associator_bracket(&s, &xi, &eta, &gamma)?.into_coeffs()
                - pm.associator_bracket(&s, &eta, &xi, &gamma)?.into_coeffs();
            Ok((skew - pm.skew_associator(&s, &gamma, &xi, &eta)?.into_coeffs()).norm())
        },
    );
    let blocks = r.pm.manifold().descriptor().blocks.clone();
    if let [Block::Sphere { .. }, Block::Circle] = blocks.as_slice() {
        r.check(
            "semidirect_homomorphism",
            tol.check_tol_analytic,
            n,
            |pm, rng| {
                let s = point(pm, rng);
                let e = basis(pm);
                let mut worst: f64 = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        worst = worst.max(pm.semidirect_homomorphism_residual(&s, &e[i], &e[j])?);
                    }
                }
                Ok(worst)
            },
        );
    }
    if let [Block::Sphere { dim: m }, Block::Sphere { dim: k }, Block::Circle] = blocks.as_slice() {
        let (m, k) = (*m, *k);
        r.check("jacobi_failure_formula", 1e-6, n, |pm, rng| {
            let s = point(pm, rng);
            Ok(jacobi_failure_mismatch(pm, &s, m, k)?)
        });
    }
}

/// Largest `|J(e_i, e_j, e′_A) − y_A (e_i x_j − e_j x_i)|` on `S^m × S^k × S¹`.
pub fn jacobi_failure_mismatch(
    pm: &ParallelizedManifold,
    s: &Point,
    m: usize,
    k: usize,
) -> Result<f64> {
    let x = s.ambient().rows(0, m + 1).into_owned();
    let y = s.ambient().rows(m + 1, k + 1).into_owned();
    let mut worst: f64 = 0.0;
    for i in 0..=m {
        for j in 0..=m {
            for a in 1..=k {
                let jac = pm
                    .jacobi_residual(s, &pm.basis(i), &pm.basis(j), &pm.basis(m + a))?
                    .into_coeffs();
                let mut expected = DVector::zeros(pm.dim());
                expected[i] += y[a] * x[j];
                expected[j] -= y[a] * x[i];
                worst = worst.max((jac - expected).amax());
            }
        }
    }
    Ok(worst)
}

fn geometry(r: &mut Runner) {
    let tol = *r.pm.tolerances();
    let n = r.samples;
    let ip = InnerProduct::identity(r.pm.dim());
    r.check(
        "pullback_fundamental_fields",
        tol.check_tol_analytic,
        n,
        |pm, rng| {
            let s = point(pm, rng);
            let (xi, eta) = (element(pm, 1.0, rng), element(pm, 1.0, rng));
            let (v, w) = (
                pm.fundamental_field(&xi, &s)?,
                pm.fundamental_field(&eta, &s)?,
            );
            Ok((pm.pullback_metric(&s, &v, &w, &ip)? - ip.inner(&xi, &eta)?).abs())
        },
    );
    r.check(
        "torsion_metric_identity",
        tol.check_tol_analytic,
        n,
        |pm, rng| {
            let s = point(pm, rng);
            let (xi, eta, gamma) = (
                element(pm, 1.0, rng),
                element(pm, 1.0, rng),
                element(pm, 1.0, rng),
            );
            let t = pm.torsion(&s, &xi, &eta)?;
            let lhs = pm.pullback_metric(&s, &t, &pm.fundamental_field(&gamma, &s)?, &ip)?;
            Ok((lhs - ip.inner(&pm.bracket(&s, &xi, &eta)?, &gamma)?).abs())
        },
    );
    r.check("metricity", tol.check_tol_fd2, n, |pm, rng| {
        let s = point(pm, rng);
        let dir = element(pm, 1.0, rng);
        let (ca, cb) = (
            DMatrix::from_fn(pm.dim(), pm.manifold().ambient_dim(), |_, _| {
                rng.random_range(-1.0..=1.0)
            }),
            {
                DMatrix::from_fn(pm.dim(), pm.manifold().ambient_dim(), |_, _| {
                    rng.random_range(-1.0..=1.0)
                })
            },
        );
        // coefficient fields depending smoothly on sin/cos of the ambient coordinates
        let f = move |p: &Point| &ca * p.ambient().map(f64::sin);
        let g = move |p: &Point| &cb * p.ambient().map(f64::cos);
        pm.metricity_residual(&s, &dir, &f, &g, &ip)
    });
    r.check("fundamental_norm_constant", 1e-9, n, |pm, rng| {
        let s = point(pm, rng);
        let (xi, dir) = (element(pm, 1.0, rng), element(pm, 1.0, rng));
        let times = [rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0)];
        pm.fundamental_norm_drift(&s, &xi, &dir, &times, &ip)
    });
    r.check(
        "retrivialization_bracket_law",
        tol.check_tol_fd2,
        n,
        |pm, rng| {
            let dim = pm.dim();
            let q = DMatrix::identity(dim, dim)
                + DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-0.3..=0.3));
            let field = QField::constant(q)?;
            let re = pm.retrivialize(field.clone())?;
            let s = point(pm, rng);
            let (xi, eta) = (element(pm, 1.0, rng), element(pm, 1.0, rng));
            re.bracket_law_residual(pm, &field, &s, &xi, &eta)
        },
    );
    if has_closed_associator(r.pm) {
        r.check(
            "nabla_torsion_closed_form",
            tol.check_tol_fd2,
            n,
            |pm, rng| {
                let s = point(pm, rng);
                let (xi, eta, gamma) = (
                    element(pm, 1.0, rng),
                    element(pm, 1.0, rng),
                    element(pm, 1.0, rng),
                );
                let closed = pm
                    .skew_associator_closed(&s, &gamma, &xi, &eta)?
                    .expect("closed form present");
                Ok((pm.nabla_torsion(&s, &xi, &eta, &gamma)?
                    - pm.fundamental_field(&closed, &s)?)
                .norm())
            },
        );
    }
}

fn lts(r: &mut Runner) {
    let tol = *r.pm.tolerances();
    let n = r.samples;
    let mut variants = vec![("fd", true, tol.check_tol_fd3)];
    if has_closed_associator(r.pm) {
        variants.insert(0, ("closed", false, tol.check_tol_analytic));
    }
    for (label, force_fd, tolerance) in variants {
        let pick: [(&str, fn(&parallax::algebra::LtsResiduals) -> f64); 3] = [
            ("skew", |l| l.skew),
            ("cyclic", |l| l.cyclic),
            ("derivation", |l| l.derivation),
        ];
        for (family, get) in pick {
            r.check(&format!("lts_{family}_{label}"), tolerance, n, |pm, rng| {
                Ok(get(&pm.lts_residuals(&point(pm, rng), force_fd)?))
            });
        }
    }
}

/// A known automorphism of the catalog manifold, drawn at random.
pub fn sample_automorphism(
    pm: &ParallelizedManifold,
    rng: &mut ChaCha8Rng,
) -> Result<Option<CandidatePair>> {
    let blocks = pm.manifold().descriptor().blocks.clone();
    let shift = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    Ok(match blocks.as_slice() {
        b if b.iter().all(|x| *x == Block::Circle) => {
            let c: Vec<f64> = (0..b.len()).map(|_| rng.random_range(-3.0..=3.0)).collect();
            Some(torus_translation(&c))
        }
        [Block::Sphere { dim: 3 }] => {
            let a = point(pm, rng);
            let q = a.as_slice();
            Some(s3_left_multiplication([q[0], q[1], q[2], q[3]])?)
        }
        [Block::Sphere { dim: m }, Block::Circle] => {
            Some(sphere_automorphism(*m, random_rotation(m + 1, rng), shift)?)
        }
        [Block::Sphere { dim: m }, Block::Sphere { dim: k }, Block::Circle] => Some(
            sphere_product_automorphism(*m, *k, random_rotation(m + 1, rng), shift)?,
        ),
        _ => None,
    })
}

fn morphisms(r: &mut Runner) {
    let n = r.samples;
    let probe =
        |pm: &ParallelizedManifold, rng: &mut ChaCha8Rng| -> Result<(CandidatePair, Point)> {
            let pair =
                sample_automorphism(pm, rng)?.unwrap_or_else(|| CandidatePair::identity(pm.dim()));
            Ok((pair, point(pm, rng)))
        };
    r.check("automorphism_morphism", 1e-8, n, |pm, rng| {
        let (pair, s) = probe(pm, rng)?;
        pm.morphism_residual(&pair, &[(element(pm, 1.0, rng), s)])
    });
    r.check("automorphism_bracket_equivariance", 1e-8, n, |pm, rng| {
        let (pair, s) = probe(pm, rng)?;
        pm.bracket_equivariance_residual(&pair, &s, &element(pm, 1.0, rng), &element(pm, 1.0, rng))
    });
    r.check("automorphism_pseudoautomorphism", 1e-6, n, |pm, rng| {
        let wide = pm.with_trust_radius(COMPANION_TRUST_RADIUS);
        let (pair, s) = probe(pm, rng)?;
        let companion = wide.companion(&pair, &s)?;
        let samples = [(element(pm, 0.2, rng), element(pm, 0.2, rng))];
        wide.pseudoautomorphism_residual(pair.h_prime(), &companion, &s, &samples)
    });
    r.check("automorphism_orthogonality", 1e-10, n, |pm, rng| {
        let (pair, _) = probe(pm, rng)?;
        Ok(parallax::linalg::orthogonality_residual(pair.h_prime()))
    });
    if sample_automorphism(r.pm, &mut seeded(0))
        .ok()
        .flatten()
        .and_then(|p| p.sphere_params().cloned())
        .is_some()
    {
        r.check("composition_parameters", 1e-10, n, |pm, rng| {
            let (a, _) = probe(pm, rng)?;
            let (b, s) = probe(pm, rng)?;
            let ab = a.compose(&b);
            let (pa, pb) = (
                a.sphere_params().expect("sphere pair"),
                b.sphere_params().expect("sphere pair"),
            );
            let (hp, hs) = pm.automorphism_embedding(&ab, &s, &[], f64::INFINITY)?;
            let rotation_error = (&hp
                .view((0, 0), (pa.rotation.nrows(), pa.rotation.ncols()))
                .into_owned()
                - &pa.rotation * &pb.rotation)
                .amax();
            let m = pa.rotation.nrows() - 1;
            let direct_pair = match pm.dim() - (m + 1) {
                0 => sphere_automorphism(m, &pa.rotation * &pb.rotation, pa.shift + pb.shift)?,
                k => sphere_product_automorphism(
                    m,
                    k,
                    &pa.rotation * &pb.rotation,
                    pa.shift + pb.shift,
                )?,
            };
            let direct = pm.apply_map(&direct_pair, &s)?;
            Ok(rotation_error.max(pm.distance(&hs, &direct)))
        });
    }
    r.check("embedding_injectivity", 1e-8, n.min(5), |pm, rng| {
        let (pair, s) = probe(pm, rng)?;
        let (hp, hs) = pm.automorphism_embedding(&pair, &s, &[], f64::INFINITY)?;
        let p = point(pm, rng);
        let rebuilt = pm.reconstruct_from_embedding(&hp, &hs, &s, &p)?;
        Ok(pm.distance(&rebuilt, &pm.apply_map(&pair, &p)?))
    });
}
