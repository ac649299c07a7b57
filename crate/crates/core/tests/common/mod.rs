#![allow(dead_code)]

use std::path::PathBuf;

use qchem_vqe::encoding::EncodingKind;
use qchem_vqe::hamiltonian::ActiveSpaceSpec;
use qchem_vqe::pes::{prepare_point, PointConfig, PreparedPoint};

pub const H2_POINTS: [&str; 3] = ["h2_sto3g_r0.60", "h2_sto3g_r0.74", "h2_sto3g_r1.00"];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn point_config(stem: &str) -> PointConfig {
    PointConfig {
        label: stem.into(),
        integrals: fixture(&format!("{stem}.int")),
        active_space: None,
    }
}

pub fn point(stem: &str, kind: EncodingKind) -> PreparedPoint {
    prepare_point(&point_config(stem), kind).unwrap()
}

/// LiH with the core orbital frozen and `active` spatial orbitals.
pub fn lih_point(active: &[usize], kind: EncodingKind) -> PreparedPoint {
    let cfg = PointConfig {
        active_space: Some(ActiveSpaceSpec {
            active_indices: active.to_vec(),
            frozen_occupied_indices: vec![0],
            n_active_electrons: 2,
        }),
        ..point_config("lih_sto3g_r1.60")
    };
    prepare_point(&cfg, kind).unwrap()
}
