//! Marker code dictionary: bit grids, rotations, lookup, rendering and
//! generation.
//!
//! Codes are the row-major concatenation of the inner `N_m x N_m` cells,
//! first row first, leftmost cell in the most significant bit. White is 1.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::Raster;

const BUILTIN_6X6: &str = include_str!("../data/dict_6x6_16.txt");

/// Square grid of cell colors, 0 = black, 1 = white.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitGrid {
    n: usize,
    bits: Vec<u8>,
}

impl BitGrid {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            bits: vec![0; n * n],
        }
    }

    /// # Panics
    /// If any row length differs from the number of rows or a value is not 0/1.
    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let n = rows.len();
        let mut bits = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "bit grid must be square");
            assert!(r.iter().all(|b| *b <= 1), "bits must be 0 or 1");
            bits.extend_from_slice(r);
        }
        Self { n, bits }
    }

    pub fn from_code(code: u64, n: usize) -> Self {
        assert!(n * n <= 64, "grid too large for a 64-bit code");
        let total = n * n;
        let bits = (0..total)
            .map(|i| ((code >> (total - 1 - i)) & 1) as u8)
            .collect();
        Self { n, bits }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.n + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, bit: u8) {
        debug_assert!(bit <= 1);
        self.bits[row * self.n + col] = bit;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.bits.chunks(self.n)
    }

    pub fn hamming(&self, other: &BitGrid) -> usize {
        assert_eq!(self.n, other.n);
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }
}

impl fmt::Debug for BitGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitGrid {}x{}", self.n, self.n)?;
        for row in self.rows() {
            let s: String = row.iter().map(|b| if *b == 1 { '#' } else { '.' }).collect();
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

/// Row-major, MSB-first concatenation of the grid.
pub fn bits_to_code(b: &BitGrid) -> u64 {
    assert!(b.n * b.n <= 64, "grid too large for a 64-bit code");
    b.bits.iter().fold(0u64, |acc, bit| (acc << 1) | *bit as u64)
}

/// Rotates 90° clockwise.
pub fn rotate_grid(b: &BitGrid) -> BitGrid {
    let n = b.n;
    let mut out = BitGrid::zeros(n);
    for r in 0..n {
        for c in 0..n {
            out.set(r, c, b.get(n - 1 - c, r));
        }
    }
    out
}

/// Clockwise rotation in quarter turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub fn from_quarters(k: usize) -> Self {
        match k % 4 {
            0 => Rotation::R0,
            1 => Rotation::R90,
            2 => Rotation::R180,
            _ => Rotation::R270,
        }
    }

    pub fn quarters(self) -> usize {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 1,
            Rotation::R180 => 2,
            Rotation::R270 => 3,
        }
    }

    pub fn degrees(self) -> u32 {
        self.quarters() as u32 * 90
    }

    pub fn from_degrees(deg: u32) -> Option<Self> {
        (deg.is_multiple_of(90) && deg < 360).then(|| Self::from_quarters((deg / 90) as usize))
    }
}

/// Result of a successful dictionary lookup: the observed grid equals entry
/// `id` rotated clockwise by `rotation`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Match {
    pub id: usize,
    pub rotation: Rotation,
}

#[derive(Debug, Clone)]
pub struct MarkerDictionary {
    name: String,
    n_m: usize,
    codes: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl MarkerDictionary {
    pub fn new(name: impl Into<String>, n_m: usize, codes: Vec<u64>) -> Result<Self> {
        let name = name.into();
        if n_m == 0 || n_m * n_m > 64 {
            return Err(Error::Dictionary(format!("unsupported code size {n_m}")));
        }
        if codes.is_empty() {
            return Err(Error::Dictionary("dictionary has no codes".into()));
        }
        let limit = if n_m * n_m == 64 {
            u64::MAX
        } else {
            (1u64 << (n_m * n_m)) - 1
        };
        let mut index = HashMap::with_capacity(codes.len());
        for (id, &code) in codes.iter().enumerate() {
            if code > limit {
                return Err(Error::Dictionary(format!(
                    "code {code:#x} does not fit a {n_m}x{n_m} grid"
                )));
            }
            let mut g = BitGrid::from_code(code, n_m);
            for k in 0..4 {
                if k > 0 && bits_to_code(&g) == code {
                    // rotationally symmetric codes make the rotation ambiguous
                    return Err(Error::Dictionary(format!(
                        "code {code:#x} is invariant under a {}° rotation",
                        k * 90
                    )));
                }
                if let Some(prev) = index.insert(bits_to_code(&g), id) {
                    if prev != id {
                        return Err(Error::Dictionary(format!(
                            "entries {prev} and {id} are rotations of each other"
                        )));
                    }
                }
                g = rotate_grid(&g);
            }
        }
        Ok(Self {
            name,
            n_m,
            codes,
            index,
        })
    }

    /// The built-in 16-entry 6x6 dictionary.
    pub fn builtin() -> Self {
        Self::parse("builtin_6x6_16", BUILTIN_6X6, Path::new("<builtin>"))
            .expect("built-in dictionary is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn code_size(&self) -> usize {
        self.n_m
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[u64] {
        &self.codes
    }

    pub fn grid(&self, id: usize) -> Option<BitGrid> {
        self.codes.get(id).map(|c| BitGrid::from_code(*c, self.n_m))
    }

    /// Finds the entry whose clockwise rotation by 0, 90, 180 or 270 degrees
    /// (tried in that order) equals `b`.
    pub fn lookup(&self, b: &BitGrid) -> Option<Match> {
        if b.size() != self.n_m {
            return None;
        }
        // b = rot^k(entry)  <=>  rot^(4-k)(b) = entry
        let mut rotated = [b.clone(), rotate_grid(b), BitGrid::zeros(0), BitGrid::zeros(0)];
        rotated[2] = rotate_grid(&rotated[1]);
        rotated[3] = rotate_grid(&rotated[2]);
        (0..4).find_map(|k| {
            let undo = &rotated[(4 - k) % 4];
            self.index
                .get(&bits_to_code(undo))
                .filter(|id| self.codes[**id] == bits_to_code(undo))
                .map(|&id| Match {
                    id,
                    rotation: Rotation::from_quarters(k),
                })
        })
    }

    /// Smallest Hamming distance between any two entries under rotation,
    /// including each entry against its own non-trivial rotations.
    pub fn min_orbit_distance(&self) -> usize {
        let grids: Vec<BitGrid> = (0..self.len()).map(|i| self.grid(i).unwrap()).collect();
        let mut best = usize::MAX;
        for (i, a) in grids.iter().enumerate() {
            let mut r = rotate_grid(a);
            for _ in 1..4 {
                best = best.min(r.hamming(a));
                for b in &grids[i + 1..] {
                    best = best.min(r.hamming(b));
                }
                r = rotate_grid(&r);
            }
            for b in &grids[i + 1..] {
                best = best.min(a.hamming(b));
            }
        }
        best
    }

    /// Text format: `N_m <n>` on the first line, then one hex code per line.
    pub fn to_text(&self) -> String {
        let digits = (self.n_m * self.n_m).div_ceil(4);
        let mut s = format!("N_m {}\n", self.n_m);
        for c in &self.codes {
            s.push_str(&format!("{c:0digits$x}\n"));
        }
        s
    }

    pub fn parse(name: &str, text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines
            .next()
            .ok_or_else(|| err(1, "missing `N_m <n>` header".into()))?;
        let n_m = header
            .strip_prefix("N_m")
            .map(str::trim)
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| err(ln, format!("expected `N_m <n>`, found `{header}`")))?;
        let mut codes = Vec::new();
        for (ln, l) in lines {
            let hex = l.trim_start_matches("0x");
            let code = u64::from_str_radix(hex, 16)
                .map_err(|e| err(ln, format!("bad hex code `{l}`: {e}")))?;
            codes.push(code);
        }
        Self::new(name, n_m, codes)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_text(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dictionary".into());
        Self::parse(&name, &text, path)
    }
}

/// Rendered marker: black border ring around the code cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerRender {
    /// `(N_m + 2)` square grid of cell colors.
    pub cells: Raster<u8>,
    pub cell_px: usize,
    /// `(N_m + 2) * cell_px` square binary image, 1 = white.
    pub image: Raster<u8>,
}

pub fn render_marker(id: usize, dict: &MarkerDictionary, cell_px: usize) -> Result<MarkerRender> {
    let grid = dict.grid(id).ok_or_else(|| Error::UnknownMarker {
        id,
        name: dict.name().to_string(),
        len: dict.len(),
    })?;
    let n = dict.code_size() + 2;
    let cells = Raster::from_fn(n, n, |c, r| {
        if r == 0 || c == 0 || r == n - 1 || c == n - 1 {
            0
        } else {
            grid.get(r - 1, c - 1)
        }
    });
    let side = n * cell_px;
    let image = Raster::from_fn(side, side, |x, y| cells.at(x / cell_px, y / cell_px));
    Ok(MarkerRender {
        cells,
        cell_px,
        image,
    })
}

/// Draws `count` random codes by rejection so that every pair of entries,
/// and every entry against its own rotations, differs in at least
/// `min_distance` cells under all rotations.
pub fn generate_dictionary(
    count: usize,
    n_m: usize,
    min_distance: usize,
    seed: u64,
    max_attempts: usize,
) -> Result<MarkerDictionary> {
    if n_m == 0 || n_m * n_m > 64 {
        return Err(Error::Dictionary(format!("unsupported code size {n_m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n_m * n_m;
    let mut accepted: Vec<[BitGrid; 4]> = Vec::with_capacity(count);
    let mut attempts = 0;
    while accepted.len() < count {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Dictionary(format!(
                "only {} of {count} codes found after {max_attempts} attempts",
                accepted.len()
            )));
        }
        let code = if total == 64 {
            rng.random::<u64>()
        } else {
            rng.random::<u64>() & ((1u64 << total) - 1)
        };
        let g0 = BitGrid::from_code(code, n_m);
        let g1 = rotate_grid(&g0);
        let g2 = rotate_grid(&g1);
        let g3 = rotate_grid(&g2);
        let self_ok = [&g1, &g2, &g3].iter().all(|g| g.hamming(&g0) >= min_distance);
        let others_ok = accepted.iter().all(|orbit| {
            orbit
                .iter()
                .all(|e| [&g0, &g1, &g2, &g3].iter().all(|g| g.hamming(e) >= min_distance))
        });
        if self_ok && others_ok {
            accepted.push([g0, g1, g2, g3]);
        }
    }
    let codes = accepted.iter().map(|o| bits_to_code(&o[0])).collect();
    MarkerDictionary::new(format!("generated_{n_m}x{n_m}_{count}"), n_m, codes)
}
