//! Channel spec files: a raw kernel tensor or a BSBC family description.

use std::fs;
use std::path::Path;

use fsbc_core::{
    build_bsbc_family, validate_kernel, Alphabets, BsbcFamilySpec, FsbcKernel, Limits,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

type Tensor5 = Vec<Vec<Vec<Vec<Vec<f64>>>>>;

/// Raw kernel in index order `(s_prev, x, y, z, s_next)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    pub label: String,
    #[serde(rename = "X")]
    pub x: usize,
    #[serde(rename = "Y")]
    pub y: usize,
    #[serde(rename = "Z")]
    pub z: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub kernel: Tensor5,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub bsbc_family: BsbcFamilySpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    Raw(RawSpec),
    Family(FamilySpec),
}

fn shape_error(path: &str, expected: usize, found: usize) -> CliError {
    CliError::Parse(format!(
        "{path}: expected {expected} entries, found {found}"
    ))
}

impl RawSpec {
    pub fn from_kernel(kernel: &FsbcKernel) -> Self {
        let d = kernel.dims();
        let kernel_t = (0..d.s)
            .map(|sp| {
                (0..d.x)
                    .map(|x| {
                        (0..d.y)
                            .map(|y| {
                                (0..d.z)
                                    .map(|z| {
                                        (0..d.s).map(|s| kernel.prob(sp, x, y, z, s)).collect()
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        RawSpec {
            label: kernel.label().to_string(),
            x: d.x,
            y: d.y,
            z: d.z,
            s: d.s,
            kernel: kernel_t,
        }
    }

    /// Flattens the tensor, naming the first level whose length is wrong.
    pub fn flatten(&self) -> Result<Vec<f64>, CliError> {
        let mut flat = Vec::with_capacity(self.s * self.x * self.y * self.z * self.s);
        if self.kernel.len() != self.s {
            return Err(shape_error("kernel", self.s, self.kernel.len()));
        }
        for (sp, a) in self.kernel.iter().enumerate() {
            if a.len() != self.x {
                return Err(shape_error(&format!("kernel[{sp}]"), self.x, a.len()));
            }
            for (x, b) in a.iter().enumerate() {
                if b.len() != self.y {
                    return Err(shape_error(&format!("kernel[{sp}][{x}]"), self.y, b.len()));
                }
                for (y, c) in b.iter().enumerate() {
                    if c.len() != self.z {
                        return Err(shape_error(
                            &format!("kernel[{sp}][{x}][{y}]"),
                            self.z,
                            c.len(),
                        ));
                    }
                    for (z, e) in c.iter().enumerate() {
                        if e.len() != self.s {
                            return Err(shape_error(
                                &format!("kernel[{sp}][{x}][{y}][{z}]"),
                                self.s,
                                e.len(),
                            ));
                        }
                        flat.extend_from_slice(e);
                    }
                }
            }
        }
        Ok(flat)
    }
}

impl ChannelSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        let family = value
            .as_object()
            .is_some_and(|o| o.contains_key("bsbc_family"));
        if family {
            serde_json::from_value(value).map(ChannelSpec::Family)
        } else {
            serde_json::from_value(value).map(ChannelSpec::Raw)
        }
        .map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let text = match self {
            ChannelSpec::Raw(r) => serde_json::to_string_pretty(r),
            ChannelSpec::Family(f) => serde_json::to_string_pretty(f),
        };
        text.expect("spec serialization cannot fail")
    }

    pub fn label(&self) -> String {
        match self {
            ChannelSpec::Raw(r) => r.label.clone(),
            ChannelSpec::Family(f) => f.label.clone().unwrap_or_else(|| "bsbc-family".to_string()),
        }
    }

    /// Validates the spec and builds the kernel.
    pub fn build(&self, limits: &Limits) -> Result<FsbcKernel, CliError> {
        match self {
            ChannelSpec::Raw(r) => {
                let flat = r.flatten()?;
                let dims = Alphabets::new(r.x, r.y, r.z, r.s);
                Ok(validate_kernel(r.label.clone(), dims, flat, limits)?)
            }
            ChannelSpec::Family(f) => {
                let k = build_bsbc_family(&f.bsbc_family)?;
                Ok(k.with_label(self.label()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FAMILY: &str = r#"{"bsbc_family": {"state_chain": [[0.9, 0.1], [0.2, 0.8]],
        "eps1": [0.1, 0.18], "eps12": [0.0625, 0.0625]}}"#;

    #[test]
    fn family_round_trip() {
        let spec = ChannelSpec::parse(FAMILY).unwrap();
        assert_eq!(ChannelSpec::parse(&spec.to_json()).unwrap(), spec);
        let k = spec.build(&Limits::default()).unwrap();
        assert_eq!(k.dims().s, 2);
    }

    #[test]
    fn raw_round_trip_is_lossless() {
        let k = ChannelSpec::parse(FAMILY)
            .unwrap()
            .build(&Limits::default())
            .unwrap();
        let raw = ChannelSpec::Raw(RawSpec::from_kernel(&k));
        let back = ChannelSpec::parse(&raw.to_json()).unwrap();
        assert_eq!(back, raw);
        let k2 = back.build(&Limits::default()).unwrap();
        assert_eq!(k2.probs(), k.probs());
    }

    #[test]
    fn errors_name_the_problem() {
        let e = ChannelSpec::parse(r#"{"label": "a", "X": 2, "Y": 2, "Z": 2, "kernel": []}"#)
            .unwrap_err();
        assert!(e.to_string().contains("missing field `S`"), "{e}");
        let e = ChannelSpec::parse(
            r#"{"label": "a", "X": 2, "Y": 1, "Z": 1, "S": 1, "kernel": [[[[[1.0]]]]]}"#,
        )
        .unwrap()
        .build(&Limits::default())
        .unwrap_err();
        assert!(e.to_string().contains("kernel[0]"), "{e}");
        let e = ChannelSpec::parse("{ not json").unwrap_err();
        assert!(matches!(e, CliError::Parse(_)));
        let e = ChannelSpec::parse(r#"{"bsbc_family": {"state_chain": [[1.0]], "eps1": [0.1]}}"#)
            .unwrap_err();
        assert!(e.to_string().contains("eps12"), "{e}");
    }
}
