//! Self-describing binary container for sampled fields, plus a plain-text
//! twin for hand-written small cases.
//!
//! Layout (little endian):
//!
//! ```text
//! magic "CLRC1" | flags u8 | dim u32
//! per axis: count u64, spacing f64
//! time_step f64 | horizon f64
//! field_count u32
//! per field: name_len u16, name utf8, kind u8 (0 real / 1 complex),
//!            components u32, items u64, payload f64 little-endian
//!            (items * components scalars; complex interleaved re,im)
//! ```
//!
//! Readers never trust counts: every allocation is bounded by the number of
//! bytes actually present, and dimensions, counts and values are validated
//! before use. Malformed input yields `Error::Container`, never a panic.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::C64;

pub const MAGIC: &[u8; 5] = b"CLRC1";

const MAX_AXIS_NODES: u64 = 100_000_000;
const MAX_FIELDS: u32 = 1024;
const MAX_NAME: u16 = 128;
const MAX_COMPONENTS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldBlock {
    pub name: String,
    pub kind: FieldKind,
    /// Scalar components per item (e.g. dim*dim for a per-node matrix).
    pub components: usize,
    /// Logical element count (nodes, face-nodes x time samples, ...).
    pub items: usize,
    /// Raw scalars: items * components entries, times 2 when complex.
    pub data: Vec<f64>,
}

impl FieldBlock {
    pub fn real(name: &str, components: usize, items: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), components * items);
        FieldBlock {
            name: name.into(),
            kind: FieldKind::Real,
            components,
            items,
            data,
        }
    }

    pub fn complex(name: &str, components: usize, items: usize, data: &[C64]) -> Self {
        assert_eq!(data.len(), components * items);
        let mut raw = Vec::with_capacity(data.len() * 2);
        for z in data {
            raw.push(z.re);
            raw.push(z.im);
        }
        FieldBlock {
            name: name.into(),
            kind: FieldKind::Complex,
            components,
            items,
            data: raw,
        }
    }

    pub fn as_complex(&self) -> Result<Vec<C64>> {
        if self.kind != FieldKind::Complex {
            return Err(Error::Container(format!("field '{}' is not complex", self.name)));
        }
        Ok(self
            .data
            .chunks_exact(2)
            .map(|p| C64::new(p[0], p[1]))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub grid: GridSpec,
    pub fields: Vec<FieldBlock>,
}

impl Container {
    pub fn new(grid: GridSpec) -> Self {
        Container {
            grid,
            fields: Vec::new(),
        }
    }

    pub fn field(&self, name: &str) -> Result<&FieldBlock> {
        self.fields
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::Container(format!("field '{name}' missing")))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.at < n {
            return Err(Error::Container(format!(
                "truncated: need {n} bytes at offset {}",
                self.at
            )));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.at
    }
}

fn finite_positive(x: f64, what: &str) -> Result<f64> {
    if !x.is_finite() || !(x > 0.0) {
        return Err(Error::Container(format!("{what} = {x} must be finite and positive")));
    }
    Ok(x)
}

/// Parse a container from raw bytes.
pub fn read_container(bytes: &[u8]) -> Result<Container> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(5)? != MAGIC {
        return Err(Error::Container("bad magic".into()));
    }
    let flags = r.u8()?;
    if flags != 0 {
        return Err(Error::Container(format!("unsupported flags {flags}")));
    }
    let dim = r.u32()? as usize;
    if !(1..=2).contains(&dim) {
        return Err(Error::Container(format!("dim {dim} out of range")));
    }
    let mut counts = Vec::with_capacity(dim);
    let mut spacing = Vec::with_capacity(dim);
    for ax in 0..dim {
        let c = r.u64()?;
        if !(3..=MAX_AXIS_NODES).contains(&c) {
            return Err(Error::Container(format!("axis {ax} count {c} out of range")));
        }
        counts.push(c as usize);
        spacing.push(finite_positive(r.f64()?, "spacing")?);
    }
    let time_step = finite_positive(r.f64()?, "time_step")?;
    let horizon = finite_positive(r.f64()?, "horizon")?;
    let grid = GridSpec::new(&counts, &spacing, time_step, horizon)?;

    let field_count = r.u32()?;
    if field_count > MAX_FIELDS {
        return Err(Error::Container(format!("{field_count} fields exceeds cap")));
    }
    let mut fields = Vec::new();
    for _ in 0..field_count {
        let name_len = r.u16()?;
        if name_len == 0 || name_len > MAX_NAME {
            return Err(Error::Container(format!("name length {name_len} out of range")));
        }
        let name = std::str::from_utf8(r.take(name_len as usize)?)
            .map_err(|_| Error::Container("field name is not utf-8".into()))?
            .to_string();
        let kind = match r.u8()? {
            0 => FieldKind::Real,
            1 => FieldKind::Complex,
            k => return Err(Error::Container(format!("unknown field kind {k}"))),
        };
        let components = r.u32()?;
        if components == 0 || components > MAX_COMPONENTS {
            return Err(Error::Container(format!("components {components} out of range")));
        }
        let items = r.u64()?;
        let per = if kind == FieldKind::Complex { 2u64 } else { 1 };
        let scalars = items
            .checked_mul(components as u64)
            .and_then(|v| v.checked_mul(per))
            .ok_or_else(|| Error::Container("field size overflow".into()))?;
        let bytes_needed = scalars
            .checked_mul(8)
            .ok_or_else(|| Error::Container("field size overflow".into()))?;
        if bytes_needed > r.remaining() as u64 {
            return Err(Error::Container(format!(
                "field '{name}' claims {bytes_needed} bytes, {} remain",
                r.remaining()
            )));
        }
        let mut data = Vec::with_capacity(scalars as usize);
        for _ in 0..scalars {
            let v = r.f64()?;
            if !v.is_finite() {
                return Err(Error::Container(format!("non-finite value in field '{name}'")));
            }
            data.push(v);
        }
        fields.push(FieldBlock {
            name,
            kind,
            components: components as usize,
            items: items as usize,
            data,
        });
    }
    if r.remaining() != 0 {
        return Err(Error::Container(format!("{} trailing bytes", r.remaining())));
    }
    Ok(Container { grid, fields })
}

/// Serialize a container.
pub fn write_container(c: &Container) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(0u8);
    out.extend_from_slice(&(c.grid.dim as u32).to_le_bytes());
    for ax in 0..c.grid.dim {
        out.extend_from_slice(&(c.grid.counts[ax] as u64).to_le_bytes());
        out.extend_from_slice(&c.grid.spacing[ax].to_le_bytes());
    }
    out.extend_from_slice(&c.grid.time_step.to_le_bytes());
    out.extend_from_slice(&c.grid.horizon.to_le_bytes());
    out.extend_from_slice(&(c.fields.len() as u32).to_le_bytes());
    for f in &c.fields {
        let name = f.name.as_bytes();
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        out.push(match f.kind {
            FieldKind::Real => 0,
            FieldKind::Complex => 1,
        });
        out.extend_from_slice(&(f.components as u32).to_le_bytes());
        out.extend_from_slice(&(f.items as u64).to_le_bytes());
        for v in &f.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_container_file(path: &Path) -> Result<Container> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::MissingArtifact(format!("{}: {e}", path.display())))?;
    read_container(&bytes)
}

pub fn write_container_file(path: &Path, c: &Container) -> Result<()> {
    std::fs::write(path, write_container(c))?;
    Ok(())
}

/// Parse the plain-text twin. Grammar, one directive per line, `#` comments:
///
/// ```text
/// clrc-text 1
/// dim 2
/// axis <count> <spacing>     (dim times)
/// time_step <dt>
/// horizon <T0>
/// field <name> <real|complex> <components> <items>
/// <items * components [* 2] whitespace-separated floats>
/// ```
pub fn read_text_container(text: &str) -> Result<Container> {
    if text.len() > 64 * 1024 * 1024 {
        return Err(Error::Container("text container exceeds 64 MiB".into()));
    }
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace())
        .peekable();

    fn want<'a>(t: &mut impl Iterator<Item = &'a str>, what: &str) -> Result<&'a str> {
        t.next()
            .ok_or_else(|| Error::Container(format!("unexpected end, wanted {what}")))
    }
    fn usizev(s: &str, what: &str) -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::Container(format!("bad {what}: '{s}'")))
    }
    fn f64v(s: &str, what: &str) -> Result<f64> {
        let v = s
            .parse::<f64>()
            .map_err(|_| Error::Container(format!("bad {what}: '{s}'")))?;
        if !v.is_finite() {
            return Err(Error::Container(format!("non-finite {what}")));
        }
        Ok(v)
    }

    if want(&mut tokens, "header")? != "clrc-text" || want(&mut tokens, "version")? != "1" {
        return Err(Error::Container("missing 'clrc-text 1' header".into()));
    }
    if want(&mut tokens, "dim keyword")? != "dim" {
        return Err(Error::Container("expected 'dim'".into()));
    }
    let dim = usizev(want(&mut tokens, "dim")?, "dim")?;
    if !(1..=2).contains(&dim) {
        return Err(Error::Container(format!("dim {dim} out of range")));
    }
    let mut counts = Vec::new();
    let mut spacing = Vec::new();
    for _ in 0..dim {
        if want(&mut tokens, "axis keyword")? != "axis" {
            return Err(Error::Container("expected 'axis'".into()));
        }
        let c = usizev(want(&mut tokens, "axis count")?, "axis count")?;
        if !(3..=MAX_AXIS_NODES as usize).contains(&c) {
            return Err(Error::Container(format!("axis count {c} out of range")));
        }
        counts.push(c);
        let h = f64v(want(&mut tokens, "axis spacing")?, "spacing")?;
        finite_positive(h, "spacing")?;
        spacing.push(h);
    }
    if want(&mut tokens, "time_step keyword")? != "time_step" {
        return Err(Error::Container("expected 'time_step'".into()));
    }
    let dt = finite_positive(f64v(want(&mut tokens, "time_step")?, "time_step")?, "time_step")?;
    if want(&mut tokens, "horizon keyword")? != "horizon" {
        return Err(Error::Container("expected 'horizon'".into()));
    }
    let horizon = finite_positive(f64v(want(&mut tokens, "horizon")?, "horizon")?, "horizon")?;
    let grid = GridSpec::new(&counts, &spacing, dt, horizon)?;

    let mut fields = Vec::new();
    while tokens.peek().is_some() {
        if fields.len() >= MAX_FIELDS as usize {
            return Err(Error::Container("too many fields".into()));
        }
        if want(&mut tokens, "field keyword")? != "field" {
            return Err(Error::Container("expected 'field'".into()));
        }
        let name = want(&mut tokens, "field name")?;
        if name.len() > MAX_NAME as usize {
            return Err(Error::Container("field name too long".into()));
        }
        let kind = match want(&mut tokens, "field kind")? {
            "real" => FieldKind::Real,
            "complex" => FieldKind::Complex,
            k => return Err(Error::Container(format!("unknown kind '{k}'"))),
        };
        let components = usizev(want(&mut tokens, "components")?, "components")?;
        if components == 0 || components > MAX_COMPONENTS as usize {
            return Err(Error::Container(format!("components {components} out of range")));
        }
        let items = usizev(want(&mut tokens, "items")?, "items")?;
        let per = if kind == FieldKind::Complex { 2 } else { 1 };
        let scalars = items
            .checked_mul(components)
            .and_then(|v| v.checked_mul(per))
            .ok_or_else(|| Error::Container("field size overflow".into()))?;
        // remaining whitespace tokens bound the plausible size
        if scalars > text.len() {
            return Err(Error::Container(format!(
                "field '{name}' claims {scalars} scalars, input cannot hold them"
            )));
        }
        let mut data = Vec::with_capacity(scalars);
        for _ in 0..scalars {
            data.push(f64v(want(&mut tokens, "value")?, "value")?);
        }
        fields.push(FieldBlock {
            name: name.to_string(),
            kind,
            components,
            items,
            data,
        });
    }
    Ok(Container { grid, fields })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Container {
        let grid = GridSpec::new(&[3, 4], &[0.5, 0.25], 0.1, 1.0).unwrap();
        let mut c = Container::new(grid);
        c.fields.push(FieldBlock::real(
            "v",
            1,
            12,
            (0..12).map(|i| i as f64 * 0.5).collect(),
        ));
        let z: Vec<C64> = (0..6).map(|i| C64::new(i as f64, -(i as f64))).collect();
        c.fields.push(FieldBlock::complex("u", 1, 6, &z));
        c
    }

    #[test]
    fn roundtrip() {
        let c = sample();
        let bytes = write_container(&c);
        let back = read_container(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.field("u").unwrap().as_complex().unwrap().len(), 6);
    }

    #[test]
    fn rejects_truncation_and_oversize_claims() {
        let bytes = write_container(&sample());
        for cut in [0, 4, 6, 10, bytes.len() - 1] {
            assert!(read_container(&bytes[..cut]).is_err());
        }
        // corrupt the item count of the first field upward
        let mut bad = bytes.clone();
        // find the first field block: after header 5+1+4 + 2*(8+8) + 8 + 8 + 4
        let off = 5 + 1 + 4 + 2 * 16 + 16 + 4;
        // name_len u16 + "v" + kind u8 + components u32 -> items u64
        let items_off = off + 2 + 1 + 1 + 4;
        bad[items_off..items_off + 8].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(read_container(&bad).is_err());
    }

    #[test]
    fn text_reader_small_case() {
        let text = "\
clrc-text 1
dim 1
axis 5 0.25
time_step 0.1
horizon 1.0
# a scalar field over the 5 nodes
field v real 1 5
0 0.5 1.0 1.5 2.0
field u complex 1 2
1 0  0 -1
";
        let c = read_text_container(text).unwrap();
        assert_eq!(c.grid.counts, vec![5]);
        assert_eq!(c.field("v").unwrap().data[3], 1.5);
        let u = c.field("u").unwrap().as_complex().unwrap();
        assert_eq!(u[1], C64::new(0.0, -1.0));
    }

    #[test]
    fn text_reader_rejects_garbage() {
        assert!(read_text_container("").is_err());
        assert!(read_text_container("clrc-text 2\n").is_err());
        assert!(read_text_container("clrc-text 1\ndim 7\n").is_err());
        assert!(read_text_container(
            "clrc-text 1\ndim 1\naxis 5 0.25\ntime_step 0.1\nhorizon 1\nfield v real 1 999\n0 0"
        )
        .is_err());
    }
}
