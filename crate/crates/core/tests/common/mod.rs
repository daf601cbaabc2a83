#![allow(dead_code)]

use std::sync::Arc;

use homoclinic_core::homoclinic::{powerlaw_homoclinic, HomoclinicOrbit};
use homoclinic_core::planar::Perturbation;
use homoclinic_core::systems::{powerlaw_system, FieldPreset, ForcingPreset};
use homoclinic_core::variational::{build_frame, FrameNormalization, FrameOptions, VariationalFrame};
use homoclinic_core::PlanarSystem;

pub const WINDOW: f64 = 20.0;

pub fn reference(g: Arc<dyn Perturbation>) -> (PlanarSystem, HomoclinicOrbit) {
    (
        powerlaw_system(1.0, 1.0, 2, g).unwrap(),
        powerlaw_homoclinic(1.0, 1.0, 2).unwrap(),
    )
}

pub fn reference_frame(g: Arc<dyn Perturbation>) -> VariationalFrame {
    let (sys, orbit) = reference(g);
    build_frame(&sys, &orbit, WINDOW, &FrameOptions::default()).unwrap()
}

pub fn preset_frame(field: &FieldPreset, forcing: &ForcingPreset, norm: FrameNormalization, window: f64) -> VariationalFrame {
    let sys = field.system(forcing).unwrap();
    let orbit = HomoclinicOrbit::for_preset(field).unwrap();
    let opts = FrameOptions {
        normalization: norm,
        ..Default::default()
    };
    build_frame(&sys, &orbit, window, &opts).unwrap()
}

pub fn rotated(angle: f64) -> FieldPreset {
    FieldPreset::PowerlawRotated {
        nu: 1.0,
        mu: 1.0,
        p: 2,
        angle,
    }
}
