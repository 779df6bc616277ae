//! Parse a program, pretty-print it, and parse the printout again.

use probcfg::syntax::{parse_program, pretty_print};

const SOURCE: &str = "
# a biased walk, stopped at 3
var x n;
n := 0;
while x < 3 and n < 10 { x ~ {0: 1/2, 1: 1/2}; n := n + 1 };
if x >= 3 { skip };
return n
";

fn main() {
    let p = parse_program(SOURCE).expect("valid program");
    let printed = pretty_print(&p);
    print!("{printed}");
    let again = parse_program(&printed).expect("printout parses");
    assert_eq!(pretty_print(&again), printed);
    println!("# loop free: {}", p.body.is_loop_free());

    match parse_program("var x; x ~ {0: 1/2, 1: 1/3}; return x") {
        Ok(_) => unreachable!(),
        Err(e) => println!("# rejected: {e}"),
    }
}
