use std::f64::consts::TAU;
use std::sync::Arc;

use super::examples::{
    cn_example, complex_mapping_torus, kernel_defect_fixture, r3_standard, r4_precosymplectic,
    sphere_mapping_torus, sphere_pole_chart, y0_halfturn, Pole,
};
use super::Scenario;
use crate::error::{Error, Result};
use crate::numeric::PointMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegistryEntry {
    pub pattern: &'static str,
    pub description: &'static str,
}

const ENTRIES: &[RegistryEntry] = &[
    RegistryEntry {
        pattern: "r3_standard",
        description: "R^3 with dx^dy and dz; cosymplectic",
    },
    RegistryEntry {
        pattern: "r4_precosymplectic",
        description: "R^4 with dx^dy and dz; kernel of flat spanned by d/dw",
    },
    RegistryEntry {
        pattern: "kernel_defect",
        description: "R^4 fixture whose flat kernel matches d/dw only on w = 1/4",
    },
    RegistryEntry {
        pattern: "mapping_torus_id",
        description: "C^2 x S^1 with T^2 rotations and moment map (|z1|^2-1, |z2|^2-1)",
    },
    RegistryEntry {
        pattern: "mapping_torus_rot(p/q)",
        description: "mapping torus of C under rotation by 2*pi*p/q",
    },
    RegistryEntry {
        pattern: "mapping_torus_rot(golden)",
        description: "mapping torus of C under rotation by 2*pi*(sqrt(5)-1)/2",
    },
    RegistryEntry {
        pattern: "cn(n,k)",
        description: "T^k x C^(n-k) x S^1 with the torus action, 1 <= n <= 3, 0 <= k < n",
    },
    RegistryEntry {
        pattern: "sphere_s1",
        description: "S^2 x S^1 on the cylindrical chart, height moment map",
    },
    RegistryEntry {
        pattern: "sphere_s1_pole(north|south)",
        description: "S^2 x S^1 on a chart around one pole",
    },
    RegistryEntry {
        pattern: "y0_halfturn",
        description: "|z1| = 1 inside the mapping torus of (z1, z2) -> (z1, -z2)",
    },
];

pub fn registry() -> &'static [RegistryEntry] {
    ENTRIES
}

fn rotation(angle: f64) -> PointMap {
    let (c, s) = (angle.cos(), angle.sin());
    Arc::new(move |z: &[f64]| vec![c * z[0] - s * z[1], s * z[0] + c * z[1]])
}

fn arguments<'a>(name: &'a str, head: &str) -> Option<&'a str> {
    name.strip_prefix(head)?
        .strip_prefix('(')?
        .strip_suffix(')')
}

fn parse_int(s: &str, name: &str) -> Result<i64> {
    s.trim()
        .parse()
        .map_err(|_| Error::UnknownScenario(name.into()))
}

/// Builds a scenario from its registry name, e.g. `cn(3,1)` or `mapping_torus_rot(3/7)`.
pub fn build_scenario(name: &str) -> Result<Scenario> {
    let compact: String = name.chars().filter(|c| !c.is_whitespace()).collect();
    let unknown = || Error::UnknownScenario(name.into());
    let mut s = match compact.as_str() {
        "r3_standard" => r3_standard()?,
        "r4_precosymplectic" => r4_precosymplectic()?,
        "kernel_defect" => kernel_defect_fixture()?,
        "mapping_torus_id" => {
            complex_mapping_torus("mapping_torus_id", 2, 7, Arc::new(|x: &[f64]| x.to_vec()))?
        }
        "sphere_s1" => sphere_mapping_torus([16, 9, 4])?,
        "y0_halfturn" => y0_halfturn()?,
        "mapping_torus_rot(golden)" => {
            let golden = (5f64.sqrt() - 1.0) / 2.0;
            complex_mapping_torus(&compact, 1, 9, rotation(TAU * golden))?
        }
        other => {
            if let Some(args) = arguments(other, "mapping_torus_rot") {
                let (p, q) = args.split_once('/').ok_or_else(unknown)?;
                let (p, q) = (parse_int(p, name)?, parse_int(q, name)?);
                if q <= 0 {
                    return Err(Error::OutOfRange(format!("rotation denominator {q}")));
                }
                complex_mapping_torus(other, 1, 9, rotation(TAU * p as f64 / q as f64))?
            } else if let Some(args) = arguments(other, "cn") {
                let (n, k) = args.split_once(',').ok_or_else(unknown)?;
                let (n, k) = (parse_int(n, name)?, parse_int(k, name)?);
                if n < 0 || k < 0 {
                    return Err(Error::OutOfRange(format!("cn({n},{k})")));
                }
                cn_example(n as usize, k as usize)?
            } else if let Some(args) = arguments(other, "sphere_s1_pole") {
                match args {
                    "north" => sphere_pole_chart(Pole::North)?,
                    "south" => sphere_pole_chart(Pole::South)?,
                    _ => return Err(unknown()),
                }
            } else {
                return Err(unknown());
            }
        }
    };
    s.name = compact;
    s.validate()?;
    Ok(s)
}
