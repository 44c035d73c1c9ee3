//! Little-endian primitive encoding with bounds-checked decoding.

use crate::error::{Error, Result};

#[derive(Default)]
pub(crate) struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn usize32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("{v} does not fit the file format")))?;
        self.u32(v);
        Ok(())
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, v: &[f64]) -> Result<()> {
        self.usize32(v.len())?;
        v.iter().for_each(|&x| self.f64(x));
        Ok(())
    }

    pub fn str(&mut self, s: &str) -> Result<()> {
        self.usize32(s.len())?;
        self.buf.extend_from_slice(s.as_bytes());
        Ok(())
    }

    pub fn strs<S: AsRef<str>>(&mut self, v: &[S]) -> Result<()> {
        self.usize32(v.len())?;
        v.iter().try_for_each(|s| self.str(s.as_ref()))
    }
}

pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

fn malformed(what: &str) -> Error {
    Error::Malformed(what.to_string())
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    pub fn is_done(&self) -> bool {
        self.pos == self.data.len()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| malformed("field runs past the end of the payload"))?;
        let out = &self.data[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn usize32(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    pub fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(Error::Malformed(format!("invalid flag byte {v}"))),
        }
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// `n` floats; the length is checked against the remaining bytes first.
    pub fn f64_n(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| malformed("array too long"))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.usize32()?;
        self.f64_n(n)
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.usize32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| malformed("text field is not UTF-8"))
    }

    pub fn strs(&mut self) -> Result<Vec<String>> {
        let n = self.usize32()?;
        if n > self.data.len() - self.pos {
            return Err(malformed("list runs past the end of the payload"));
        }
        (0..n).map(|_| self.str()).collect()
    }
}
