//! Recursive-descent parser for the network notation.

use super::ast::*;
use super::ArchError;

struct Scanner {
    chars: Vec<char>,
    pos: usize,
}

impl Scanner {
    fn new(text: &str) -> Self {
        Scanner {
            chars: text.chars().collect(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        self.skip_ws();
        let c = self.chars.get(self.pos).copied();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn syntax(&self, message: impl Into<String>) -> ArchError {
        ArchError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ArchError> {
        match self.bump() {
            Some(c) if c == want => Ok(()),
            Some(c) => {
                self.pos -= 1;
                Err(self.syntax(format!("expected '{want}', found '{c}'")))
            }
            None => Err(self.syntax(format!("expected '{want}', found end of input"))),
        }
    }

    fn expect_arrow(&mut self) -> Result<(), ArchError> {
        self.expect('-')?;
        match self.bump() {
            Some('>') => Ok(()),
            _ => {
                self.pos -= 1;
                Err(self.syntax("expected '->'"))
            }
        }
    }

    fn number(&mut self) -> Result<usize, ArchError> {
        self.skip_ws();
        let start = self.pos;
        let mut value: usize = 0;
        while let Some(c) = self.chars.get(self.pos) {
            if let Some(d) = c.to_digit(10) {
                value = value
                    .checked_mul(10)
                    .and_then(|v| v.checked_add(d as usize))
                    .ok_or_else(|| ArchError::Syntax {
                        offset: start,
                        message: "number too large".into(),
                    })?;
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.syntax("expected a number"));
        }
        Ok(value)
    }

    fn positive(&mut self, what: &str) -> Result<usize, ArchError> {
        let start = self.pos;
        let v = self.number()?;
        if v == 0 {
            return Err(ArchError::Syntax {
                offset: start,
                message: format!("{what} must be positive"),
            });
        }
        Ok(v)
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }
}

fn parse_conv(s: &mut Scanner) -> Result<ConvDecl, ArchError> {
    s.expect('C')?;
    s.expect('(')?;
    let kernel = s.positive("kernel side")?;
    s.expect(',')?;
    let stride = s.positive("stride")?;
    s.expect(',')?;
    let filters = s.positive("filter count")?;
    let pad = if s.peek() == Some(',') {
        s.bump();
        s.number()?
    } else {
        ConvDecl::default_pad(kernel, stride)
    };
    s.expect(')')?;
    Ok(ConvDecl {
        kernel,
        stride,
        filters,
        pad,
    })
}

fn parse_pool(s: &mut Scanner) -> Result<PoolDecl, ArchError> {
    s.expect('P')?;
    let avg = if s.peek() == Some('*') {
        s.bump();
        true
    } else {
        false
    };
    s.expect('(')?;
    let stride = s.positive("pool stride")?;
    s.expect(',')?;
    let window = s.positive("pool window")?;
    let pad = if s.peek() == Some(',') {
        s.bump();
        s.number()?
    } else {
        0
    };
    s.expect(')')?;
    Ok(PoolDecl {
        stride,
        window,
        pad,
        avg,
    })
}

fn parse_residual(s: &mut Scanner, repeat: usize) -> Result<ResidualDecl, ArchError> {
    s.expect('R')?;
    s.expect('(')?;
    let mut convs = vec![parse_conv(s)?];
    while s.peek() == Some('-') {
        s.expect_arrow()?;
        convs.push(parse_conv(s)?);
    }
    s.expect(')')?;
    if convs.len() < 2 {
        return Err(ArchError::Semantic(
            "a residual unit needs at least two convolutions".into(),
        ));
    }
    Ok(ResidualDecl { convs, repeat })
}

fn parse_element(s: &mut Scanner) -> Result<ElementDecl, ArchError> {
    match s.peek() {
        Some('C') => Ok(ElementDecl::Conv(parse_conv(s)?)),
        Some('P') => Ok(ElementDecl::Pool(parse_pool(s)?)),
        Some('L') => {
            s.bump();
            Ok(ElementDecl::Lrn)
        }
        Some('F') => {
            s.bump();
            s.expect('(')?;
            let size = if s.peek() == Some('e') {
                s.bump();
                FcSize::Classes
            } else {
                FcSize::Fixed(s.positive("neuron count")?)
            };
            s.expect(')')?;
            Ok(ElementDecl::Fc(size))
        }
        Some('D') => {
            s.bump();
            s.expect('(')?;
            let c1 = s.positive("inception c1")?;
            s.expect(',')?;
            let reduce3 = s.positive("inception cr3")?;
            s.expect(',')?;
            let c3 = s.positive("inception c3")?;
            s.expect(',')?;
            let reduce5 = s.positive("inception cr5")?;
            s.expect(',')?;
            let c5 = s.positive("inception c5")?;
            s.expect(',')?;
            let pool_proj = s.positive("inception crM")?;
            s.expect(')')?;
            Ok(ElementDecl::Inception(InceptionDecl {
                c1,
                reduce3,
                c3,
                reduce5,
                c5,
                pool_proj,
            }))
        }
        Some('R') => Ok(ElementDecl::Residual(parse_residual(s, 1)?)),
        Some(c) if c.is_ascii_digit() => {
            let repeat = s.positive("repetition count")?;
            match s.bump() {
                Some('x') | Some('\u{d7}') => {}
                _ => {
                    s.pos -= 1;
                    return Err(s.syntax("expected 'x' after repetition count"));
                }
            }
            Ok(ElementDecl::Residual(parse_residual(s, repeat)?))
        }
        Some('I') => Err(ArchError::Semantic("input declared more than once".into())),
        Some(c) => Err(s.syntax(format!("unexpected '{c}'"))),
        None => Err(s.syntax("unexpected end of input")),
    }
}

/// Parses a network description into an [`ArchSpec`].
pub fn parse_arch(text: &str) -> Result<ArchSpec, ArchError> {
    let mut s = Scanner::new(text);
    if s.peek() != Some('I') {
        return Err(ArchError::Semantic(
            "description must start with I(w,h,c)".into(),
        ));
    }
    s.bump();
    s.expect('(')?;
    let width = s.positive("input width")?;
    s.expect(',')?;
    let height = s.positive("input height")?;
    s.expect(',')?;
    let channels = s.positive("input channels")?;
    s.expect(')')?;
    let mut elements = Vec::new();
    while !s.at_end() {
        s.expect_arrow()?;
        elements.push(parse_element(&mut s)?);
    }
    if elements.is_empty() {
        return Err(ArchError::Semantic(
            "no layers after the input declaration".into(),
        ));
    }
    Ok(ArchSpec {
        input: InputDecl {
            width,
            height,
            channels,
        },
        elements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_conv_lrn_pool_chain() {
        let spec = parse_arch("I(227,227,3)->C(11,4,96)->L->P(2,3)").unwrap();
        assert_eq!(
            spec.input,
            InputDecl {
                width: 227,
                height: 227,
                channels: 3
            }
        );
        assert_eq!(
            spec.elements,
            vec![
                ElementDecl::Conv(ConvDecl {
                    kernel: 11,
                    stride: 4,
                    filters: 96,
                    pad: 0
                }),
                ElementDecl::Lrn,
                ElementDecl::Pool(PoolDecl {
                    stride: 2,
                    window: 3,
                    pad: 0,
                    avg: false
                }),
            ]
        );
    }

    #[test]
    fn input_alone_is_an_error() {
        let err = parse_arch("I(224,224,3)").unwrap_err();
        assert!(matches!(err, ArchError::Semantic(_)), "{err}");
    }

    #[test]
    fn parses_repeated_residual() {
        let spec = parse_arch("I(56,56,64)->3xR(C(1,1,64)->C(3,1,64)->C(1,1,256))").unwrap();
        match &spec.elements[0] {
            ElementDecl::Residual(r) => {
                assert_eq!(r.repeat, 3);
                assert_eq!(r.convs.len(), 3);
                assert_eq!(
                    r.convs[1],
                    ConvDecl {
                        kernel: 3,
                        stride: 1,
                        filters: 64,
                        pad: 1
                    }
                );
            }
            other => panic!("expected residual, got {other:?}"),
        }
    }

    #[test]
    fn multiplication_sign_also_marks_repetition() {
        let a = parse_arch("I(8,8,3)->2xR(C(1,1,4)->C(1,1,4))").unwrap();
        let b = parse_arch("I(8,8,3)->2\u{d7}R(C(1,1,4)->C(1,1,4))").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stride_one_conv_defaults_to_same_padding() {
        let spec = parse_arch("I(13,13,256)->C(3,1,384)").unwrap();
        match spec.elements[0] {
            ElementDecl::Conv(c) => assert_eq!(c.pad, 1),
            _ => unreachable!(),
        }
    }

    #[test]
    fn explicit_padding_overrides_default() {
        let spec = parse_arch("I(224,224,3)->C(7,2,64,3)->P(2,3,1)").unwrap();
        match (&spec.elements[0], &spec.elements[1]) {
            (ElementDecl::Conv(c), ElementDecl::Pool(p)) => {
                assert_eq!(c.pad, 3);
                assert_eq!(p.pad, 1);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn average_pool_star() {
        let spec = parse_arch("I(7,7,1024)->P*(1,7)->F(e)").unwrap();
        assert_eq!(
            spec.elements[0],
            ElementDecl::Pool(PoolDecl {
                stride: 1,
                window: 7,
                pad: 0,
                avg: true
            })
        );
        assert_eq!(spec.elements[1], ElementDecl::Fc(FcSize::Classes));
    }

    #[test]
    fn syntax_error_carries_offset() {
        let err = parse_arch("I(227,227,3)->C(11,4)").unwrap_err();
        match err {
            ArchError::Syntax { offset, .. } => assert_eq!(offset, 20), // the ')'
            other => panic!("expected syntax error, got {other}"),
        }
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert!(parse_arch("I(0,227,3)->L").is_err());
        assert!(parse_arch("I(8,8,3)->C(0,1,4)").is_err());
        assert!(parse_arch("I(8,8,3)->0xR(C(1,1,4)->C(1,1,4))").is_err());
    }

    #[test]
    fn repeated_input_is_semantic_error() {
        let err = parse_arch("I(8,8,3)->I(8,8,3)").unwrap_err();
        assert!(matches!(err, ArchError::Semantic(_)));
    }

    #[test]
    fn whitespace_is_insignificant() {
        let a = parse_arch("I(8,8,3) -> C(3, 1, 4) -> P(2, 2)").unwrap();
        let b = parse_arch("I(8,8,3)->C(3,1,4)->P(2,2)").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_conv_residual_is_rejected() {
        assert!(parse_arch("I(8,8,3)->R(C(1,1,4))").is_err());
    }

    #[test]
    fn print_parse_round_trip_on_handwritten_specs() {
        let texts = [
            "I(227,227,3)->C(11,4,96)->L->P(2,3)->F(4096)->F(e)",
            "I(32,32,3)->C(3,2,8,1)->D(8,8,16,4,8,8)->P*(1,3)->F(10)",
            "I(56,56,64)->3xR(C(1,1,64)->C(3,1,64)->C(1,1,256))->F(e)",
            "I(224,224,3)->C(7,2,64,3)->P(2,3,1)->L->F(e)",
        ];
        for t in texts {
            let ast = parse_arch(t).unwrap();
            let printed = ast.to_text();
            let reparsed = parse_arch(&printed).unwrap();
            assert_eq!(ast, reparsed, "round trip failed for {t}");
        }
    }
}
