//! System-definition files.
//!
//! A system is stored as JSON text with the symbol indexed `[a][A][alpha]`
//! and numbers emitted as shortest round-trip decimals, so that
//! emit -> parse -> emit is byte-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::PrincipalSymbol;

/// On-disk representation of a system definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    pub name: String,
    pub n_space: usize,
    pub e: usize,
    pub u: usize,
    pub symbol: Vec<Vec<Vec<f64>>>,
}

impl SystemFile {
    pub fn from_symbol(symbol: &PrincipalSymbol) -> Self {
        let nd = symbol.n_dirs();
        let e = symbol.equations();
        let u = symbol.unknowns();
        let mut nested = vec![vec![vec![0.0; u]; e]; nd];
        for ((a, row, col), &v) in symbol.coeffs().indexed_iter() {
            nested[a][row][col] = v;
        }
        Self {
            name: symbol.name().to_string(),
            n_space: symbol.n_space(),
            e,
            u,
            symbol: nested,
        }
    }

    pub fn into_symbol(&self) -> Result<PrincipalSymbol> {
        PrincipalSymbol::from_nested(self.name.clone(), self.n_space, self.e, self.u, &self.symbol)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("system file serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::DimensionMismatch(format!("system file parse error: {e}")))
    }
}

pub fn read_system(path: &Path) -> Result<PrincipalSymbol> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::DimensionMismatch(format!("cannot read {}: {e}", path.display())))?;
    SystemFile::from_json(&text)?.into_symbol()
}

pub fn write_system(path: &Path, symbol: &PrincipalSymbol) -> Result<()> {
    let text = SystemFile::from_symbol(symbol).to_json();
    fs::write(path, text)
        .map_err(|e| Error::DimensionMismatch(format!("cannot write {}: {e}", path.display())))
}
