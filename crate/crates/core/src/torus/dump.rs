//! Binary field dumps: `QMA1`, a little-endian `u32` dimension count, one `u32`
//! per dimension, then little-endian `f64` values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{Form2Field, ScalarField, TorusGrid};
use crate::error::{QmaError, Result};
use crate::qform::{CMat, QForm2};

pub const DUMP_MAGIC: &[u8; 4] = b"QMA1";

pub fn write_dump(path: &Path, dims: &[usize], values: &[f64]) -> Result<()> {
    let expected: usize = dims.iter().product();
    if expected != values.len() {
        return Err(QmaError::Format(format!(
            "{} values do not fill dimensions {dims:?}",
            values.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&u32_of(dims.len())?.to_le_bytes())?;
    for &d in dims {
        w.write_all(&u32_of(d)?.to_le_bytes())?;
    }
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn u32_of(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| QmaError::Format(format!("dimension {v} does not fit in u32")))
}

pub fn read_dump(path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| QmaError::Format("truncated header".into()))?;
    if &magic != DUMP_MAGIC {
        return Err(QmaError::Format("missing QMA1 magic".into()));
    }
    let read_u32 = |r: &mut BufReader<File>| -> Result<usize> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)
            .map_err(|_| QmaError::Format("truncated header".into()))?;
        Ok(u32::from_le_bytes(b) as usize)
    };
    let count = read_u32(&mut r)?;
    let dims = (0..count)
        .map(|_| read_u32(&mut r))
        .collect::<Result<Vec<_>>>()?;
    let total = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| QmaError::Format("dimension product overflows".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != total * 8 {
        return Err(QmaError::Format(format!(
            "expected {} bytes of samples, found {}",
            total * 8,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((dims, values))
}

impl ScalarField {
    pub fn write_dump(&self, path: &Path) -> Result<()> {
        write_dump(path, self.grid().sizes(), self.values())
    }

    /// Reads a scalar dump; the dimension count must be a multiple of four.
    pub fn read_dump(path: &Path) -> Result<Self> {
        let (dims, values) = read_dump(path)?;
        if dims.is_empty() || dims.len() % 4 != 0 {
            return Err(QmaError::Format(format!(
                "{} dimensions is not 4n",
                dims.len()
            )));
        }
        let grid = TorusGrid::new(dims.len() / 4, dims)?;
        ScalarField::new(grid, values)
    }
}

impl Form2Field {
    /// Dimensions are the grid sizes followed by `[2n, 2n, 2]` (row, column, re/im).
    pub fn write_dump(&self, path: &Path) -> Result<()> {
        let dim = 2 * self.grid().n();
        let mut dims = self.grid().sizes().to_vec();
        dims.extend([dim, dim, 2]);
        let mut values = Vec::with_capacity(self.values().len() * dim * dim * 2);
        for form in self.values() {
            for i in 0..dim {
                for j in 0..dim {
                    let c = form.get(i, j);
                    values.push(c.re);
                    values.push(c.im);
                }
            }
        }
        write_dump(path, &dims, &values)
    }

    pub fn read_dump(path: &Path) -> Result<Self> {
        let (dims, values) = read_dump(path)?;
        let k = dims.len();
        if k < 7 || dims[k - 1] != 2 || dims[k - 2] != dims[k - 3] || dims[k - 2] % 2 != 0 {
            return Err(QmaError::Format(format!(
                "{dims:?} is not a form-field shape"
            )));
        }
        let dim = dims[k - 2];
        let grid = TorusGrid::new(dim / 2, dims[..k - 3].to_vec())?;
        let stride = dim * dim * 2;
        let forms = values
            .chunks_exact(stride)
            .map(|c| {
                QForm2::new(CMat::from_fn(dim, dim, |i, j| {
                    Complex64::new(c[2 * (i * dim + j)], c[2 * (i * dim + j) + 1])
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        Form2Field::new(grid, forms)
    }
}
