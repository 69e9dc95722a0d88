//! The NPY v1.0 subset used for feature tensors: little-endian `f32`
//! (`'<f4'`), C order, any rank ≥ 1.
//!
//! Layout: magic `\x93NUMPY`, version bytes `1 0`, a `u16` little-endian
//! header length, an ASCII Python dict literal padded with spaces and a
//! trailing newline so the data starts on a 64-byte boundary, then the raw
//! values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
pub const DTYPE: &str = "<f4";
const ALIGN: usize = 64;
/// Magic, two version bytes and the header-length field.
const PREAMBLE_LEN: usize = 10;

/// A dense row-major `f32` tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::usage(
                "tensor shape must have at least one dimension",
            ));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::dim(format!(
                "shape {shape:?} holds {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    /// Always `"<f4"`; other dtypes are rejected at read time.
    pub fn dtype(&self) -> &'static str {
        DTYPE
    }
}

/// Parsed NPY header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NpyHeader {
    pub shape: Vec<usize>,
    /// Byte offset of the first value.
    pub data_offset: u64,
}

impl NpyHeader {
    pub fn num_elements(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Encodes the full header (preamble + padded dict) for `shape`.
pub fn encode_header(shape: &[usize]) -> Result<Vec<u8>> {
    if shape.is_empty() {
        return Err(Error::usage(
            "tensor shape must have at least one dimension",
        ));
    }
    let dims = match shape {
        [n] => format!("({n},)"),
        _ => format!(
            "({})",
            shape
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    let mut dict = format!("{{'descr': '{DTYPE}', 'fortran_order': False, 'shape': {dims}, }}");
    let unpadded = PREAMBLE_LEN + dict.len() + 1;
    let padded = unpadded.div_ceil(ALIGN) * ALIGN;
    dict.extend(std::iter::repeat_n(' ', padded - unpadded));
    dict.push('\n');
    let header_len = u16::try_from(dict.len())
        .map_err(|_| Error::usage(format!("shape {shape:?} makes the NPY header too long")))?;

    let mut out = Vec::with_capacity(padded);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    debug_assert_eq!(out.len() % ALIGN, 0);
    Ok(out)
}

/// Reads and validates the header from the start of `reader`.
pub fn read_header<R: Read>(reader: &mut R, path: &Path) -> Result<NpyHeader> {
    let mut pre = [0u8; PREAMBLE_LEN];
    reader
        .read_exact(&mut pre)
        .map_err(|_| Error::format(path, Some(0), "file shorter than the 10-byte NPY preamble"))?;
    if &pre[..6] != MAGIC {
        return Err(Error::format(path, Some(0), "expected magic \\x93NUMPY"));
    }
    if pre[6..8] != [1, 0] {
        return Err(Error::format(
            path,
            Some(6),
            format!(
                "unsupported NPY version {}.{}, expected 1.0",
                pre[6], pre[7]
            ),
        ));
    }
    let len = u16::from_le_bytes([pre[8], pre[9]]) as usize;
    let mut dict = vec![0u8; len];
    reader.read_exact(&mut dict).map_err(|_| {
        Error::format(
            path,
            Some(10),
            format!("header truncated (expected {len} bytes)"),
        )
    })?;
    let text = std::str::from_utf8(&dict)
        .map_err(|_| Error::format(path, Some(10), "header is not ASCII"))?;
    let header =
        parse_dict(text).map_err(|(pos, msg)| Error::format(path, Some(10 + pos as u64), msg))?;
    Ok(NpyHeader {
        shape: header,
        data_offset: (PREAMBLE_LEN + len) as u64,
    })
}

/// Parses the dict literal and returns the shape; checks descr and order.
fn parse_dict(text: &str) -> std::result::Result<Vec<usize>, (usize, String)> {
    let mut p = DictParser {
        s: text.as_bytes(),
        pos: 0,
    };
    p.expect(b'{')?;
    let mut descr = None;
    let mut fortran = None;
    let mut shape = None;
    loop {
        p.skip_ws();
        if p.peek() == Some(b'}') {
            p.pos += 1;
            break;
        }
        let key_pos = p.pos;
        let key = p.string()?;
        p.expect(b':')?;
        let value_pos = p.pos;
        match key.as_str() {
            "descr" => descr = Some((value_pos, p.string()?)),
            "fortran_order" => fortran = Some((value_pos, p.boolean()?)),
            "shape" => shape = Some(p.tuple()?),
            other => return Err((key_pos, format!("unexpected header key {other:?}"))),
        }
        p.skip_ws();
        match p.peek() {
            Some(b',') => p.pos += 1,
            Some(b'}') => {}
            _ => return Err((p.pos, "expected ',' or '}' in header dict".into())),
        }
    }
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err((p.pos, "trailing bytes after header dict".into()));
    }
    let (pos, descr) = descr.ok_or((0, "header lacks 'descr'".to_string()))?;
    if descr != DTYPE {
        return Err((pos, format!("unsupported dtype {descr:?}, expected '<f4'")));
    }
    let (pos, fortran) = fortran.ok_or((0, "header lacks 'fortran_order'".to_string()))?;
    if fortran {
        return Err((
            pos,
            "fortran_order True is unsupported, expected C order".into(),
        ));
    }
    let shape = shape.ok_or((0, "header lacks 'shape'".to_string()))?;
    if shape.is_empty() {
        return Err((0, "zero-dimensional tensors are unsupported".into()));
    }
    Ok(shape)
}

struct DictParser<'a> {
    s: &'a [u8],
    pos: usize,
}

type PResult<T> = std::result::Result<T, (usize, String)>;

impl DictParser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\n' | b'\t' | b'\r')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> PResult<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err((self.pos, format!("expected {:?}", c as char)))
        }
    }

    fn string(&mut self) -> PResult<String> {
        self.skip_ws();
        let quote = match self.peek() {
            Some(q @ (b'\'' | b'"')) => q,
            _ => return Err((self.pos, "expected a quoted string".into())),
        };
        let start = self.pos + 1;
        let end = self.s[start..]
            .iter()
            .position(|&c| c == quote)
            .map(|i| start + i)
            .ok_or((self.pos, "unterminated string".to_string()))?;
        self.pos = end + 1;
        Ok(String::from_utf8_lossy(&self.s[start..end]).into_owned())
    }

    fn boolean(&mut self) -> PResult<bool> {
        self.skip_ws();
        if self.s[self.pos..].starts_with(b"True") {
            self.pos += 4;
            Ok(true)
        } else if self.s[self.pos..].starts_with(b"False") {
            self.pos += 5;
            Ok(false)
        } else {
            Err((self.pos, "expected True or False".into()))
        }
    }

    fn tuple(&mut self) -> PResult<Vec<usize>> {
        self.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b')') => {
                    self.pos += 1;
                    return Ok(dims);
                }
                Some(c) if c.is_ascii_digit() => {
                    let start = self.pos;
                    while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        self.pos += 1;
                    }
                    let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                    dims.push(
                        text.parse()
                            .map_err(|_| (start, format!("bad dimension {text}")))?,
                    );
                    self.skip_ws();
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {}
                        _ => return Err((self.pos, "expected ',' or ')' in shape".into())),
                    }
                }
                _ => return Err((self.pos, "expected a dimension or ')'".into())),
            }
        }
    }
}

pub fn read_tensor_file(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let header = read_header(&mut reader, path)?;
    let n = header.num_elements();
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() != n * 4 {
        return Err(Error::format(
            path,
            Some(header.data_offset),
            format!(
                "expected {} data bytes for shape {:?}, found {}",
                n * 4,
                header.shape,
                bytes.len()
            ),
        ));
    }
    Ok(Tensor {
        shape: header.shape,
        data: decode_f32(&bytes),
    })
}

pub fn write_tensor_file(path: impl AsRef<Path>, tensor: &Tensor) -> Result<()> {
    let mut w = NpyWriter::create(path, &tensor.shape)?;
    w.write_values(&tensor.data)?;
    w.finish()
}

/// Streams values into an NPY file whose shape is fixed up front.
pub struct NpyWriter {
    path: PathBuf,
    out: BufWriter<File>,
    expected: usize,
    written: usize,
}

impl NpyWriter {
    pub fn create(path: impl AsRef<Path>, shape: &[usize]) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let header = encode_header(shape)?;
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        out.write_all(&header).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            path,
            out,
            expected: shape.iter().product(),
            written: 0,
        })
    }

    pub fn write_values(&mut self, values: &[f32]) -> Result<()> {
        if self.written + values.len() > self.expected {
            return Err(Error::dim(format!(
                "{}: writing past the declared {} values",
                self.path.display(),
                self.expected
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!(
                "{}: value {} is not finite",
                self.path.display(),
                self.written + i
            )));
        }
        let mut buf = Vec::with_capacity(values.len() * 4);
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        self.out
            .write_all(&buf)
            .map_err(|e| Error::io(&self.path, e))?;
        self.written += values.len();
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        if self.written != self.expected {
            return Err(Error::dim(format!(
                "{}: wrote {} of {} declared values",
                self.path.display(),
                self.written,
                self.expected
            )));
        }
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub(crate) fn decode_f32(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect()
}
