//! JSON descriptions of fields and maps, `{"family": ..., "parameters": {...}}`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    pullback, Bubble, ChenLiBubble, ConformalMap, ConstantField, ExpExample, Field, LiouvilleField,
    QuadraticField, RadialField,
};
use crate::error::Result;
use crate::geometry::Vec2;
use crate::holomorphic::HolomorphicMap;
use crate::mobius::MobiusMap;
use crate::radial::RadialProfile;

fn origin() -> [f64; 2] {
    [0.0, 0.0]
}

fn point(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "parameters", rename_all = "snake_case")]
pub enum FieldSpec {
    Bubble {
        a: f64,
        b: f64,
        #[serde(default = "origin")]
        center: [f64; 2],
    },
    ChenLi {
        a: f64,
        #[serde(default = "origin")]
        center: [f64; 2],
    },
    Liouville {
        f: HoloSpec,
    },
    ExpExample,
    Quadratic {
        a: f64,
    },
    Constant {
        c: f64,
    },
    /// Profile CSV with header `r,v[,dv,ddv]`.
    Radial {
        csv: String,
        #[serde(default = "origin")]
        center: [f64; 2],
    },
    Pullback {
        field: Box<FieldSpec>,
        map: MapSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HoloSpec {
    /// Coefficients lowest degree first, each `[re, im]`.
    Polynomial {
        coeffs: Vec<[f64; 2]>,
    },
    Exp,
    Mobius {
        map: MobiusMap,
    },
    Compose {
        outer: Box<HoloSpec>,
        inner: Box<HoloSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    Mobius { map: MobiusMap },
    Holomorphic { f: HoloSpec },
}

impl HoloSpec {
    pub fn build(&self) -> Result<HolomorphicMap> {
        Ok(match self {
            HoloSpec::Polynomial { coeffs } => HolomorphicMap::polynomial(
                coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect(),
            ),
            HoloSpec::Exp => HolomorphicMap::exp(),
            HoloSpec::Mobius { map } => HolomorphicMap::mobius(*map)?,
            HoloSpec::Compose { outer, inner } => {
                HolomorphicMap::compose(outer.build()?, inner.build()?)
            }
        })
    }
}

impl MapSpec {
    pub fn build(&self) -> Result<ConformalMap> {
        Ok(match self {
            MapSpec::Mobius { map } => ConformalMap::Mobius(*map),
            MapSpec::Holomorphic { f } => ConformalMap::Holomorphic(f.build()?),
        })
    }
}

impl FieldSpec {
    pub fn build(&self) -> Result<Field> {
        Ok(match self {
            FieldSpec::Bubble { a, b, center } => Arc::new(Bubble::new(*a, *b, point(*center))?),
            FieldSpec::ChenLi { a, center } => Arc::new(ChenLiBubble::new(*a, point(*center))?),
            FieldSpec::Liouville { f } => Arc::new(LiouvilleField::new(f.build()?)),
            FieldSpec::ExpExample => Arc::new(ExpExample),
            FieldSpec::Quadratic { a } => Arc::new(QuadraticField { a: *a }),
            FieldSpec::Constant { c } => Arc::new(ConstantField { c: *c }),
            FieldSpec::Radial { csv, center } => {
                let profile = RadialProfile::read_csv(csv)?;
                Arc::new(RadialField::new(&profile, point(*center))?)
            }
            FieldSpec::Pullback { field, map } => pullback(field.build()?, map.build()?),
        })
    }
}
