//! Parse network descriptions and print their canonical form.
//!
//! ```text
//! cargo run --example parse_arch
//! ```

use ensnet::arch::{parse_arch, ElementDecl};

fn main() {
    let text = "I(227,227,3) -> C(11,4,96) -> L -> P(2,3)
                -> C(5,1,256) -> L -> P(2,3) -> F(4096) -> F(e)";
    let spec = parse_arch(text).expect("the description is well-formed");
    println!("canonical: {}", spec.to_text());
    println!(
        "input {}x{}x{}, {} elements",
        spec.input.width,
        spec.input.height,
        spec.input.channels,
        spec.elements.len()
    );
    for el in &spec.elements {
        let name = match el {
            ElementDecl::Conv(c) => format!(
                "conv {}x{} stride {} -> {} filters",
                c.kernel, c.kernel, c.stride, c.filters
            ),
            ElementDecl::Pool(p) if p.avg => {
                format!("avg pool {}x{} stride {}", p.window, p.window, p.stride)
            }
            ElementDecl::Pool(p) => {
                format!("max pool {}x{} stride {}", p.window, p.window, p.stride)
            }
            ElementDecl::Lrn => "local response normalization".into(),
            ElementDecl::Fc(_) => "fully connected".into(),
            ElementDecl::Inception(d) => format!("inception ({} channels out)", d.out_channels()),
            ElementDecl::Residual(r) => format!("residual x{} ({} convs)", r.repeat, r.convs.len()),
        };
        println!("  {name}");
    }

    // repetition notation unrolls residual groups
    let res = parse_arch("I(56,56,64)->3xR(C(1,1,64)->C(3,1,64)->C(1,1,256))").unwrap();
    println!("\nresidual group: {}", res.to_text());

    // malformed input produces a diagnostic with a character offset
    match parse_arch("I(227,227,3)->C(11,4)") {
        Err(e) => println!("\nexpected failure: {e}"),
        Ok(_) => unreachable!(),
    }
}
