use nalgebra::{DMatrix, DVector};

use super::{Block, Manifold, ManifoldDescriptor, StructureFunctions};

/// The flat torus `T^k` with its coordinate frame `∂/∂θ_i`.
#[derive(Debug, Clone)]
pub struct Torus {
    desc: ManifoldDescriptor,
}

impl Torus {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "torus dimension must be positive");
        Self {
            desc: ManifoldDescriptor::new(format!("torus{k}"), vec![Block::Circle; k]),
        }
    }
}

impl Manifold for Torus {
    fn descriptor(&self) -> &ManifoldDescriptor {
        &self.desc
    }

    fn frame_on(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        let k = self.desc.intrinsic_dim;
        DMatrix::identity(k, k)
    }

    fn structure_functions(&self, _x: &DVector<f64>) -> Option<StructureFunctions> {
        Some(StructureFunctions::zeros(self.desc.intrinsic_dim))
    }

    fn closed_form_flow(
        &self,
        xi: &DVector<f64>,
        x: &DVector<f64>,
        t: f64,
    ) -> Option<DVector<f64>> {
        Some(x + xi * t)
    }

    fn closed_form_associator(
        &self,
        _x: &DVector<f64>,
        _direction: &DVector<f64>,
        _u: &DVector<f64>,
        _v: &DVector<f64>,
    ) -> Option<DVector<f64>> {
        Some(DVector::zeros(self.desc.intrinsic_dim))
    }
}
