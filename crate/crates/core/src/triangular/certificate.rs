//! Plain-text serialization of flatness certificates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Block, FlatOrder, FlatnessCertificate, TriangularDecomposition, TriangularError};
use crate::exterior::{Chart, ChartTransform, KForm};
use crate::symexpr::{Expr, Symbol};
use crate::sysdsl::{parse_expr, parse_system, render_expr, DslError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CertificateError {
    #[error("malformed certificate: {0}")]
    Malformed(String),
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Triangular(#[from] TriangularError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockData {
    pub y: Vec<String>,
    pub zhat: Vec<String>,
}

/// Serializable form of a [`FlatnessCertificate`]; all expressions are rendered text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateData {
    /// The source system in `.fds` syntax.
    pub system: String,
    pub chart: Vec<String>,
    pub blocks: Vec<BlockData>,
    /// Per block, per equation: differential name to coefficient.
    pub equations: Vec<Vec<BTreeMap<String, String>>>,
    /// Original coordinate to its expression on the block chart.
    pub forward: BTreeMap<String, String>,
    /// Block coordinate to its expression in the original coordinates.
    pub inverse: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub order: FlatOrder,
}

fn names(symbols: &[Symbol]) -> Vec<String> {
    symbols.iter().map(|s| s.name().to_string()).collect()
}

impl FlatnessCertificate {
    pub fn to_data(&self) -> CertificateData {
        let td = &self.decomposition;
        let chart = td.chart();
        let t = td.transform();
        let equations = td
            .all_equations()
            .iter()
            .map(|forms| {
                forms
                    .iter()
                    .map(|g| g.terms().iter().map(|(idx, c)| (chart.differential_name(idx[0]), render_expr(c))).collect())
                    .collect()
            })
            .collect();
        CertificateData {
            system: self.system.to_fds(),
            chart: names(chart.coords()),
            blocks: td.blocks().iter().map(|b| BlockData { y: names(&b.y), zhat: names(&b.zhat) }).collect(),
            equations,
            forward: t.target().coords().iter().zip(t.forward()).map(|(s, e)| (s.name().to_string(), render_expr(e))).collect(),
            inverse: chart.coords().iter().zip(t.inverse()).map(|(s, e)| (s.name().to_string(), render_expr(e))).collect(),
            outputs: self.outputs.iter().map(render_expr).collect(),
            order: self.order,
        }
    }

    pub fn from_data(data: &CertificateData) -> Result<FlatnessCertificate, CertificateError> {
        let system = parse_system(&data.system)?;
        let coords: Vec<Symbol> = data.chart.iter().map(|n| Symbol::aux(n)).collect();
        let chart = Chart::new(coords, Some(system.time.clone())).map_err(TriangularError::from)?;
        let target = Chart::new(system.coordinates(), Some(system.time.clone())).map_err(TriangularError::from)?;
        let on_chart = chart.symbols();
        let on_target = target.symbols();
        let lookup = |map: &BTreeMap<String, String>, key: &Symbol, symbols: &[Symbol]| -> Result<Expr, CertificateError> {
            let text = map.get(key.name()).ok_or_else(|| CertificateError::Malformed(format!("no expression for {key}")))?;
            Ok(parse_expr(text, symbols)?)
        };
        let forward = target.coords().iter().map(|s| lookup(&data.forward, s, &on_chart)).collect::<Result<Vec<_>, _>>()?;
        let inverse = chart.coords().iter().map(|s| lookup(&data.inverse, s, &on_target)).collect::<Result<Vec<_>, _>>()?;
        let transform = ChartTransform::new(&chart, &target, forward, inverse).map_err(TriangularError::from)?;
        let symbol = |name: &str| -> Result<Symbol, CertificateError> {
            on_chart
                .iter()
                .find(|s| s.name() == name)
                .cloned()
                .ok_or_else(|| CertificateError::Malformed(format!("unknown coordinate {name}")))
        };
        let blocks = data
            .blocks
            .iter()
            .map(|b| {
                Ok(Block {
                    y: b.y.iter().map(|n| symbol(n)).collect::<Result<_, CertificateError>>()?,
                    zhat: b.zhat.iter().map(|n| symbol(n)).collect::<Result<_, CertificateError>>()?,
                })
            })
            .collect::<Result<Vec<_>, CertificateError>>()?;
        let mut equations = Vec::with_capacity(data.equations.len());
        for group in &data.equations {
            let mut forms = Vec::with_capacity(group.len());
            for eq in group {
                let mut terms = Vec::with_capacity(eq.len());
                for (key, text) in eq {
                    let name = key.strip_prefix('d').ok_or_else(|| CertificateError::Malformed(format!("bad differential {key}")))?;
                    let s = symbol(name)?;
                    terms.push((vec![chart.index_of(&s).unwrap()], parse_expr(text, &on_chart)?));
                }
                forms.push(KForm::from_terms(&chart, 1, terms));
            }
            equations.push(forms);
        }
        let decomposition = TriangularDecomposition::new(blocks, equations, transform)?;
        let outputs = data.outputs.iter().map(|o| parse_expr(o, &on_target)).collect::<Result<Vec<_>, _>>()?;
        Ok(FlatnessCertificate { system, decomposition, outputs, order: data.order })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_data()).expect("certificate data serializes")
    }

    pub fn from_json(text: &str) -> Result<FlatnessCertificate, CertificateError> {
        let data: CertificateData = serde_json::from_str(text).map_err(|e| CertificateError::Malformed(e.to_string()))?;
        FlatnessCertificate::from_data(&data)
    }
}
