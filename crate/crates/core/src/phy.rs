//! OFDM transmit/receive chain: QPSK mapping, comb-pilot resource grid and
//! cyclic-prefix handling.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::estimators::PilotLsGrid;
use crate::spectral;
use crate::{Error, Result, C64};

/// Dimensions of one estimation block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridConfig {
    /// Subcarriers per OFDM symbol (`N`).
    pub n_subcarriers: usize,
    /// Pilot subcarriers per OFDM symbol (`Np`).
    pub n_pilots: usize,
    /// OFDM symbols per estimation block (`M`).
    pub symbols: usize,
    /// Cyclic prefix length in samples.
    pub cp_len: usize,
}

impl GridConfig {
    pub fn new(n_subcarriers: usize, n_pilots: usize, symbols: usize, cp_len: usize) -> Result<Self> {
        let cfg = Self {
            n_subcarriers,
            n_pilots,
            symbols,
            cp_len,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// N = 512, Np = 64, M = 2, 40-sample CP.
    pub fn lte_like() -> Self {
        Self {
            n_subcarriers: 512,
            n_pilots: 64,
            symbols: 2,
            cp_len: 40,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_subcarriers.is_power_of_two() || !self.n_pilots.is_power_of_two() {
            return Err(Error::config(format!(
                "subcarrier count {} and pilot count {} must be powers of two",
                self.n_subcarriers, self.n_pilots
            )));
        }
        if self.n_pilots > self.n_subcarriers {
            return Err(Error::config("more pilots than subcarriers"));
        }
        if self.symbols == 0 {
            return Err(Error::config("block must hold at least one OFDM symbol"));
        }
        if self.cp_len >= self.n_subcarriers {
            return Err(Error::config(format!(
                "cyclic prefix {} must be shorter than the symbol ({})",
                self.cp_len, self.n_subcarriers
            )));
        }
        Ok(())
    }

    pub fn pilot_spacing(&self) -> usize {
        self.n_subcarriers / self.n_pilots
    }

    pub fn is_pilot(&self, subcarrier: usize) -> bool {
        subcarrier.is_multiple_of(self.pilot_spacing())
    }

    pub fn data_per_symbol(&self) -> usize {
        self.n_subcarriers - self.n_pilots
    }

    pub fn data_cells(&self) -> usize {
        self.data_per_symbol() * self.symbols
    }

    pub fn bits_per_block(&self) -> usize {
        2 * self.data_cells()
    }

    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }

    pub fn block_len(&self) -> usize {
        self.symbols * self.symbol_len()
    }
}

/// Dense complex matrix stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::default(); rows * cols],
        }
    }

    pub fn from_columns(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::input(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[col * self.rows + row]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[col * self.rows + row] = value;
    }

    pub fn column(&self, col: usize) -> &[C64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn column_mut(&mut self, col: usize) -> &mut [C64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    /// All entries, columns concatenated in order.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }
}

/// Frequency-domain block: `N x M` cells plus the pilot symbols placed on
/// subcarriers `n * spacing` of every symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    pub cells: ComplexMatrix,
    pub pilot_values: ComplexMatrix,
}

impl ResourceGrid {
    /// Places `data` (symbol-major, ascending subcarrier, pilots skipped)
    /// and `pilot_values` on the grid.
    pub fn assemble(cfg: &GridConfig, data: &[C64], pilot_values: &ComplexMatrix) -> Result<Self> {
        if data.len() != cfg.data_cells() {
            return Err(Error::input(format!(
                "{} data symbols for {} data cells",
                data.len(),
                cfg.data_cells()
            )));
        }
        check_pilot_shape(cfg, pilot_values)?;
        let spacing = cfg.pilot_spacing();
        let mut cells = ComplexMatrix::zeros(cfg.n_subcarriers, cfg.symbols);
        let mut data = data.iter();
        for m in 0..cfg.symbols {
            let column = cells.column_mut(m);
            for (k, cell) in column.iter_mut().enumerate() {
                *cell = if k % spacing == 0 {
                    pilot_values.get(k / spacing, m)
                } else {
                    *data.next().expect("length checked")
                };
            }
        }
        Ok(Self {
            cells,
            pilot_values: pilot_values.clone(),
        })
    }
}

fn check_pilot_shape(cfg: &GridConfig, pilots: &ComplexMatrix) -> Result<()> {
    if pilots.rows() != cfg.n_pilots || pilots.cols() != cfg.symbols {
        return Err(Error::input(format!(
            "pilot matrix is {}x{}, expected {}x{}",
            pilots.rows(),
            pilots.cols(),
            cfg.n_pilots,
            cfg.symbols
        )));
    }
    Ok(())
}

fn check_grid_shape(cfg: &GridConfig, grid: &ComplexMatrix) -> Result<()> {
    if grid.rows() != cfg.n_subcarriers || grid.cols() != cfg.symbols {
        return Err(Error::input(format!(
            "grid is {}x{}, expected {}x{}",
            grid.rows(),
            grid.cols(),
            cfg.n_subcarriers,
            cfg.symbols
        )));
    }
    Ok(())
}

/// Deterministic unit-modulus QPSK pilot sequence, `Np x M`.
pub fn generate_pilots(seed: u64, cfg: &GridConfig) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..cfg.n_pilots * cfg.symbols)
        .map(|_| qpsk_point(rng.random(), rng.random()))
        .collect();
    ComplexMatrix {
        rows: cfg.n_pilots,
        cols: cfg.symbols,
        data,
    }
}

/// Gray mapping: bit 0 picks the sign of the real part, bit 1 the imaginary.
#[inline]
fn qpsk_point(b0: bool, b1: bool) -> C64 {
    let re = if b0 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
    let im = if b1 { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
    C64::new(re, im)
}

/// Maps bit pairs `(b0, b1)` to `((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)`.
pub fn qpsk_modulate(bits: &[u8]) -> Result<Vec<C64>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::input(format!("odd bit count {}", bits.len())));
    }
    bits.chunks_exact(2)
        .map(|pair| match (pair[0], pair[1]) {
            (b0 @ 0..=1, b1 @ 0..=1) => Ok(qpsk_point(b0 == 1, b1 == 1)),
            _ => Err(Error::input("bits must be 0 or 1")),
        })
        .collect()
}

/// Hard decisions; a zero real or imaginary part decides bit 0.
pub fn qpsk_demodulate(symbols: &[C64]) -> Vec<u8> {
    symbols
        .iter()
        .flat_map(|s| [(s.re < 0.0) as u8, (s.im < 0.0) as u8])
        .collect()
}

/// IDFT each symbol column, scale by `sqrt(N)` and prepend the cyclic prefix.
pub fn ofdm_modulate(grid: &ComplexMatrix, cfg: &GridConfig) -> Result<Vec<C64>> {
    check_grid_shape(cfg, grid)?;
    let n = cfg.n_subcarriers;
    let plan = spectral::plan(n)?;
    let scale = (n as f64).sqrt();
    let mut out = Vec::with_capacity(cfg.block_len());
    let mut body = vec![C64::default(); n];
    for m in 0..cfg.symbols {
        body.copy_from_slice(grid.column(m));
        plan.inverse(&mut body)?;
        for v in body.iter_mut() {
            *v *= scale;
        }
        out.extend_from_slice(&body[n - cfg.cp_len..]);
        out.extend_from_slice(&body);
    }
    Ok(out)
}

/// Drop the cyclic prefix, DFT the body and scale by `1/sqrt(N)`.
pub fn ofdm_demodulate(samples: &[C64], cfg: &GridConfig) -> Result<ComplexMatrix> {
    if samples.len() != cfg.block_len() {
        return Err(Error::input(format!(
            "{} samples, expected {}",
            samples.len(),
            cfg.block_len()
        )));
    }
    let n = cfg.n_subcarriers;
    let plan = spectral::plan(n)?;
    let scale = 1.0 / (n as f64).sqrt();
    let mut grid = ComplexMatrix::zeros(n, cfg.symbols);
    for (m, symbol) in samples.chunks_exact(cfg.symbol_len()).enumerate() {
        let column = grid.column_mut(m);
        column.copy_from_slice(&symbol[cfg.cp_len..]);
        plan.forward(column)?;
        for v in column.iter_mut() {
            *v *= scale;
        }
    }
    Ok(grid)
}

/// LS estimates at the pilot cells: `Y_p[n, m] * conj(X_p[n, m])`.
pub fn extract_pilot_ls(
    rx_grid: &ComplexMatrix,
    pilot_values: &ComplexMatrix,
    cfg: &GridConfig,
) -> Result<PilotLsGrid> {
    check_grid_shape(cfg, rx_grid)?;
    check_pilot_shape(cfg, pilot_values)?;
    let spacing = cfg.pilot_spacing();
    let mut out = ComplexMatrix::zeros(cfg.n_pilots, cfg.symbols);
    for m in 0..cfg.symbols {
        for n in 0..cfg.n_pilots {
            out.set(n, m, rx_grid.get(n * spacing, m) * pilot_values.get(n, m).conj());
        }
    }
    Ok(PilotLsGrid::new(out))
}

/// Data cells of one symbol column in ascending subcarrier order.
pub fn data_cells<'a>(column: &'a [C64], cfg: &GridConfig) -> impl Iterator<Item = (usize, C64)> + 'a {
    let spacing = cfg.pilot_spacing();
    column
        .iter()
        .copied()
        .enumerate()
        .filter(move |(k, _)| k % spacing != 0)
}
