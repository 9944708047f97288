use std::sync::Arc;

use super::{Manifold, SphereCircle, SphereProduct, Torus, S3};
use crate::error::{Error, Result};

/// Catalog keys exercised by default listings and suites.
pub fn catalog_keys() -> &'static [&'static str] {
    &[
        "torus2",
        "torus3",
        "s3",
        "sphere_circle2",
        "sphere_circle4",
        "sphere_sphere_circle2_2",
    ]
}

fn parse_dim(s: &str) -> Option<usize> {
    s.parse::<usize>().ok().filter(|&d| (1..=64).contains(&d))
}

/// Resolves a catalog key: `torus<k>`, `s3`, `sphere_circle<m>`, `sphere_sphere_circle<m>_<n>`.
pub fn lookup(key: &str) -> Result<Arc<dyn Manifold>> {
    let unknown = || Error::UnknownManifold(key.to_string());
    if key == "s3" {
        return Ok(Arc::new(S3::new()));
    }
    if let Some(rest) = key.strip_prefix("sphere_sphere_circle") {
        let (m, n) = rest.split_once('_').ok_or_else(unknown)?;
        let (m, n) = (
            parse_dim(m).ok_or_else(unknown)?,
            parse_dim(n).ok_or_else(unknown)?,
        );
        return Ok(Arc::new(SphereProduct::sphere_sphere_circle(m, n)));
    }
    if let Some(rest) = key.strip_prefix("sphere_circle") {
        return Ok(Arc::new(SphereCircle::new(
            parse_dim(rest).ok_or_else(unknown)?,
        )));
    }
    if let Some(rest) = key.strip_prefix("torus") {
        return Ok(Arc::new(Torus::new(parse_dim(rest).ok_or_else(unknown)?)));
    }
    Err(unknown())
}
