#![allow(dead_code)]

use yoshida_core::quaternion::brandt::BrandtSystem;
use yoshida_core::quaternion::eigen::{newforms, EigenSystem};

pub struct Flagship {
    pub f_system: BrandtSystem,
    pub g_system: BrandtSystem,
    pub f: EigenSystem,
    pub g: EigenSystem,
    pub m1: u64,
}

/// Level 19: the weight-6 newform whose Atkin–Lehner sign matches 19a.
pub fn flagship() -> Flagship {
    let (f_system, fs) = newforms(6, 19, 13).unwrap();
    let (g_system, gs) = newforms(2, 19, 13).unwrap();
    let g = gs[0].clone();
    let f = fs.into_iter().find(|f| f.al_signs == g.al_signs).expect("a compatible weight-6 form");
    Flagship { f_system, g_system, f, g, m1: 19 }
}
