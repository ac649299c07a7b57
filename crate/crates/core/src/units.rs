//! Reporting-boundary unit conversions. Everything internal is in hartree.

pub const HARTREE_TO_KCAL_PER_MOL: f64 = 627.5094740631;

pub fn hartree_to_kcal_per_mol(e: f64) -> f64 {
    e * HARTREE_TO_KCAL_PER_MOL
}

pub fn hartree_to_millihartree(e: f64) -> f64 {
    e * 1e3
}
