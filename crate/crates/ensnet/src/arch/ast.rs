//! AST for the network-composition notation.
//!
//! A description is one input declaration followed by a chain of elements:
//!
//! ```text
//! I(227,227,3)->C(11,4,96)->L->P(2,3)->F(4096)->F(e)
//! ```
//!
//! * `I(w,h,c)`: input image, w x h pixels, c channels
//! * `C(k,s,q[,p])`: convolution with square kernel k, stride s, q filters,
//!   optional padding p (default: k/2 when s == 1, else 0)
//! * `P(s,r[,p])`: max pooling with stride s, window r, optional padding
//! * `P*(s,r[,p])`: average pooling
//! * `L`: local response normalization
//! * `F(e)` / `F(n)`: fully connected; `e` stays symbolic until expansion
//! * `D(c1,cr3,c3,cr5,c5,crM)`: inception module filter counts
//! * `kxR(C..->C..)`: residual unit with a conv chain, repeated k times
//!
//! Whitespace is insignificant; both `x` and `×` mark repetition.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchSpec {
    pub input: InputDecl,
    pub elements: Vec<ElementDecl>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputDecl {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElementDecl {
    Conv(ConvDecl),
    Pool(PoolDecl),
    Lrn,
    Fc(FcSize),
    Inception(InceptionDecl),
    Residual(ResidualDecl),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvDecl {
    pub kernel: usize,
    pub stride: usize,
    pub filters: usize,
    pub pad: usize,
}

impl ConvDecl {
    /// Padding applied when the notation omits it: same-size for stride-1
    /// convolutions, none otherwise.
    pub fn default_pad(kernel: usize, stride: usize) -> usize {
        if stride == 1 {
            kernel / 2
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolDecl {
    pub stride: usize,
    pub window: usize,
    pub pad: usize,
    pub avg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FcSize {
    /// `F(e)`: bound to the class count at expansion time.
    Classes,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InceptionDecl {
    pub c1: usize,
    pub reduce3: usize,
    pub c3: usize,
    pub reduce5: usize,
    pub c5: usize,
    pub pool_proj: usize,
}

impl InceptionDecl {
    /// Channels after the branch concat: c1 + c3 + c5 + crM.
    pub fn out_channels(&self) -> usize {
        self.c1 + self.c3 + self.c5 + self.pool_proj
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualDecl {
    pub convs: Vec<ConvDecl>,
    pub repeat: usize,
}

impl ResidualDecl {
    /// A unit downsamples when its notation carries a stride above 1.
    pub fn block_stride(&self) -> usize {
        self.convs.iter().map(|c| c.stride).max().unwrap_or(1)
    }

    pub fn out_channels(&self) -> usize {
        self.convs.last().map(|c| c.filters).unwrap_or(0)
    }
}

fn push_conv(out: &mut String, c: &ConvDecl) {
    if c.pad == ConvDecl::default_pad(c.kernel, c.stride) {
        out.push_str(&format!("C({},{},{})", c.kernel, c.stride, c.filters));
    } else {
        out.push_str(&format!(
            "C({},{},{},{})",
            c.kernel, c.stride, c.filters, c.pad
        ));
    }
}

impl ArchSpec {
    /// Canonical text form; parsing it back yields a structurally equal AST.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "I({},{},{})",
            self.input.width, self.input.height, self.input.channels
        );
        for el in &self.elements {
            out.push_str("->");
            match el {
                ElementDecl::Conv(c) => push_conv(&mut out, c),
                ElementDecl::Pool(p) => {
                    let tag = if p.avg { "P*" } else { "P" };
                    if p.pad == 0 {
                        out.push_str(&format!("{tag}({},{})", p.stride, p.window));
                    } else {
                        out.push_str(&format!("{tag}({},{},{})", p.stride, p.window, p.pad));
                    }
                }
                ElementDecl::Lrn => out.push('L'),
                ElementDecl::Fc(FcSize::Classes) => out.push_str("F(e)"),
                ElementDecl::Fc(FcSize::Fixed(n)) => out.push_str(&format!("F({n})")),
                ElementDecl::Inception(d) => out.push_str(&format!(
                    "D({},{},{},{},{},{})",
                    d.c1, d.reduce3, d.c3, d.reduce5, d.c5, d.pool_proj
                )),
                ElementDecl::Residual(r) => {
                    if r.repeat != 1 {
                        out.push_str(&format!("{}x", r.repeat));
                    }
                    out.push_str("R(");
                    for (i, c) in r.convs.iter().enumerate() {
                        if i > 0 {
                            out.push_str("->");
                        }
                        push_conv(&mut out, c);
                    }
                    out.push(')');
                }
            }
        }
        out
    }
}
