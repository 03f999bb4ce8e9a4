//! Minimal PLY reader/writer: ASCII and binary little-endian, scalar and
//! list properties. Values are widened to `f64` on read, which is exact for
//! every PLY scalar type except 64-bit integers (not part of the format).

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            other => return Err(Error::Format(format!("unknown PLY scalar type `{other}`"))),
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::I8 => "char",
            Self::U8 => "uchar",
            Self::I16 => "short",
            Self::U16 => "ushort",
            Self::I32 => "int",
            Self::U32 => "uint",
            Self::F32 => "float",
            Self::F64 => "double",
        }
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }

    fn encode_le(self, v: f64, out: &mut Vec<u8>) {
        match self {
            Self::I8 => out.push(v as i8 as u8),
            Self::U8 => out.push(v as u8),
            Self::I16 => out.extend_from_slice(&(v as i16).to_le_bytes()),
            Self::U16 => out.extend_from_slice(&(v as u16).to_le_bytes()),
            Self::I32 => out.extend_from_slice(&(v as i32).to_le_bytes()),
            Self::U32 => out.extend_from_slice(&(v as u32).to_le_bytes()),
            Self::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            Self::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }

    fn format_ascii(self, v: f64) -> String {
        match self {
            // shortest representation that parses back to the same f32
            Self::F32 => format!("{}", v as f32),
            Self::F64 => format!("{v}"),
            _ => format!("{}", v as i64),
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Self::F32 | Self::F64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropertyKind {
    Scalar(ScalarType),
    List { count: ScalarType, item: ScalarType },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyDef {
    pub name: String,
    pub kind: PropertyKind,
}

/// Column storage for one property of an element.
#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Scalar(Vec<f64>),
    List(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub name: String,
    pub count: usize,
    pub properties: Vec<PropertyDef>,
    pub columns: Vec<Column>,
}

impl Element {
    pub fn new(name: impl Into<String>, count: usize) -> Self {
        Self {
            name: name.into(),
            count,
            properties: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn with_scalar(mut self, name: impl Into<String>, ty: ScalarType, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.count);
        self.properties.push(PropertyDef {
            name: name.into(),
            kind: PropertyKind::Scalar(ty),
        });
        self.columns.push(Column::Scalar(values));
        self
    }

    pub fn with_list(
        mut self,
        name: impl Into<String>,
        count: ScalarType,
        item: ScalarType,
        values: Vec<Vec<f64>>,
    ) -> Self {
        debug_assert_eq!(values.len(), self.count);
        self.properties.push(PropertyDef {
            name: name.into(),
            kind: PropertyKind::List { count, item },
        });
        self.columns.push(Column::List(values));
        self
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.properties.iter().position(|p| p.name == name)
    }

    pub fn has(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        match &self.columns[self.index_of(name)?] {
            Column::Scalar(v) => Some(v),
            Column::List(_) => None,
        }
    }

    /// Scalar column or a format error naming the missing property.
    pub fn require_scalar(&self, name: &str) -> Result<&[f64]> {
        self.scalar(name).ok_or_else(|| {
            Error::Format(format!(
                "element `{}` is missing required property `{name}`",
                self.name
            ))
        })
    }

    pub fn list(&self, name: &str) -> Option<&[Vec<f64>]> {
        match &self.columns[self.index_of(name)?] {
            Column::List(v) => Some(v),
            Column::Scalar(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlyFile {
    pub format: PlyFormat,
    pub comments: Vec<String>,
    pub elements: Vec<Element>,
}

impl PlyFile {
    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name == name)
    }

    pub fn require_element(&self, name: &str) -> Result<&Element> {
        self.element(name)
            .ok_or_else(|| Error::Format(format!("PLY file has no `{name}` element")))
    }
}

fn read_header_line<R: BufRead>(r: &mut R) -> Result<String> {
    let mut buf = Vec::new();
    let n = r
        .read_until(b'\n', &mut buf)
        .map_err(|e| Error::Format(format!("reading PLY header: {e}")))?;
    if n == 0 {
        return Err(Error::Format("unexpected end of file in PLY header".into()));
    }
    let s = String::from_utf8(buf).map_err(|_| Error::Format("PLY header is not valid UTF-8".into()))?;
    Ok(s.trim_end_matches(['\n', '\r']).to_string())
}

pub fn read_ply<R: BufRead>(mut r: R) -> Result<PlyFile> {
    if read_header_line(&mut r)?.trim() != "ply" {
        return Err(Error::Format("missing `ply` magic".into()));
    }
    let mut format = None;
    let mut comments = Vec::new();
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = read_header_line(&mut r)?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                format = Some(match tok.next() {
                    Some("ascii") => PlyFormat::Ascii,
                    Some("binary_little_endian") => PlyFormat::BinaryLittleEndian,
                    Some(other) => {
                        return Err(Error::Format(format!("unsupported PLY format `{other}`")))
                    }
                    None => return Err(Error::Format("empty PLY format line".into())),
                });
            }
            Some("comment") | Some("obj_info") => {
                comments.push(line.split_once(' ').map_or("", |(_, rest)| rest).to_string());
            }
            Some("element") => {
                let name = tok.next().ok_or_else(|| Error::Format("element without name".into()))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| Error::Format(format!("element `{name}` has no valid count")))?;
                elements.push(Element::new(name, count));
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::Format("property before any element".into()))?;
                let t = tok.next().ok_or_else(|| Error::Format("property without type".into()))?;
                let kind = if t == "list" {
                    let c = ScalarType::parse(tok.next().unwrap_or(""))?;
                    let i = ScalarType::parse(tok.next().unwrap_or(""))?;
                    if !c.is_integer() {
                        return Err(Error::Format("list count type must be an integer".into()));
                    }
                    PropertyKind::List { count: c, item: i }
                } else {
                    PropertyKind::Scalar(ScalarType::parse(t)?)
                };
                let name = tok.next().ok_or_else(|| Error::Format("property without name".into()))?;
                el.properties.push(PropertyDef {
                    name: name.to_string(),
                    kind,
                });
            }
            Some("end_header") => break,
            Some(other) => return Err(Error::Format(format!("unknown PLY header keyword `{other}`"))),
            None => {}
        }
    }
    let format = format.ok_or_else(|| Error::Format("PLY header has no format line".into()))?;
    for el in &mut elements {
        el.columns = el
            .properties
            .iter()
            .map(|p| match p.kind {
                PropertyKind::Scalar(_) => Column::Scalar(Vec::with_capacity(el.count)),
                PropertyKind::List { .. } => Column::List(Vec::with_capacity(el.count)),
            })
            .collect();
    }
    match format {
        PlyFormat::Ascii => read_ascii_body(&mut r, &mut elements)?,
        PlyFormat::BinaryLittleEndian => read_binary_body(&mut r, &mut elements)?,
    }
    Ok(PlyFile {
        format,
        comments,
        elements,
    })
}

fn read_ascii_body<R: BufRead>(r: &mut R, elements: &mut [Element]) -> Result<()> {
    let mut body = String::new();
    r.read_to_string(&mut body)
        .map_err(|e| Error::Format(format!("reading PLY body: {e}")))?;
    let mut tokens = body.split_ascii_whitespace();
    let mut next = |el: &str, i: usize| -> Result<f64> {
        let t = tokens
            .next()
            .ok_or_else(|| Error::Format(format!("PLY body ends early in element `{el}` #{i}")))?;
        t.parse::<f64>()
            .map_err(|_| Error::Format(format!("bad number `{t}` in element `{el}` #{i}")))
    };
    for el in elements.iter_mut() {
        for i in 0..el.count {
            for (p, col) in el.properties.iter().zip(el.columns.iter_mut()) {
                match (&p.kind, col) {
                    (PropertyKind::Scalar(t), Column::Scalar(v)) => {
                        let x = next(&el.name, i)?;
                        v.push(if *t == ScalarType::F32 { x as f32 as f64 } else { x });
                    }
                    (PropertyKind::List { item, .. }, Column::List(v)) => {
                        let n = next(&el.name, i)?;
                        if n < 0.0 || n.fract() != 0.0 {
                            return Err(Error::Format(format!("bad list length in `{}` #{i}", el.name)));
                        }
                        let items = (0..n as usize)
                            .map(|_| next(&el.name, i).map(|x| if *item == ScalarType::F32 { x as f32 as f64 } else { x }))
                            .collect::<Result<_>>()?;
                        v.push(items);
                    }
                    _ => unreachable!(),
                }
            }
        }
    }
    Ok(())
}

fn read_binary_body<R: Read>(r: &mut R, elements: &mut [Element]) -> Result<()> {
    let mut buf = [0u8; 8];
    let mut read = |ty: ScalarType, el: &str, i: usize| -> Result<f64> {
        let b = &mut buf[..ty.size()];
        r.read_exact(b)
            .map_err(|_| Error::Format(format!("PLY body ends early in element `{el}` #{i}")))?;
        Ok(ty.decode_le(b))
    };
    for el in elements.iter_mut() {
        for i in 0..el.count {
            for (p, col) in el.properties.iter().zip(el.columns.iter_mut()) {
                match (&p.kind, col) {
                    (PropertyKind::Scalar(t), Column::Scalar(v)) => v.push(read(*t, &el.name, i)?),
                    (PropertyKind::List { count, item }, Column::List(v)) => {
                        let n = read(*count, &el.name, i)?;
                        if n < 0.0 {
                            return Err(Error::Format(format!("negative list length in `{}` #{i}", el.name)));
                        }
                        let items = (0..n as usize)
                            .map(|_| read(*item, &el.name, i))
                            .collect::<Result<_>>()?;
                        v.push(items);
                    }
                    _ => unreachable!(),
                }
            }
        }
    }
    Ok(())
}

pub fn write_ply<W: Write>(w: &mut W, ply: &PlyFile) -> std::io::Result<()> {
    let mut head = String::from("ply\n");
    head.push_str(match ply.format {
        PlyFormat::Ascii => "format ascii 1.0\n",
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    for c in &ply.comments {
        head.push_str(&format!("comment {c}\n"));
    }
    for el in &ply.elements {
        head.push_str(&format!("element {} {}\n", el.name, el.count));
        for p in &el.properties {
            match p.kind {
                PropertyKind::Scalar(t) => head.push_str(&format!("property {} {}\n", t.name(), p.name)),
                PropertyKind::List { count, item } => head.push_str(&format!(
                    "property list {} {} {}\n",
                    count.name(),
                    item.name(),
                    p.name
                )),
            }
        }
    }
    head.push_str("end_header\n");
    w.write_all(head.as_bytes())?;

    let mut out = Vec::new();
    for el in &ply.elements {
        for i in 0..el.count {
            match ply.format {
                PlyFormat::BinaryLittleEndian => {
                    for (p, col) in el.properties.iter().zip(&el.columns) {
                        match (&p.kind, col) {
                            (PropertyKind::Scalar(t), Column::Scalar(v)) => t.encode_le(v[i], &mut out),
                            (PropertyKind::List { count, item }, Column::List(v)) => {
                                count.encode_le(v[i].len() as f64, &mut out);
                                for &x in &v[i] {
                                    item.encode_le(x, &mut out);
                                }
                            }
                            _ => unreachable!(),
                        }
                    }
                }
                PlyFormat::Ascii => {
                    let mut parts = Vec::new();
                    for (p, col) in el.properties.iter().zip(&el.columns) {
                        match (&p.kind, col) {
                            (PropertyKind::Scalar(t), Column::Scalar(v)) => parts.push(t.format_ascii(v[i])),
                            (PropertyKind::List { item, .. }, Column::List(v)) => {
                                parts.push(v[i].len().to_string());
                                parts.extend(v[i].iter().map(|&x| item.format_ascii(x)));
                            }
                            _ => unreachable!(),
                        }
                    }
                    out.extend_from_slice(parts.join(" ").as_bytes());
                    out.push(b'\n');
                }
            }
            if out.len() > 1 << 16 {
                w.write_all(&out)?;
                out.clear();
            }
        }
    }
    w.write_all(&out)
}
