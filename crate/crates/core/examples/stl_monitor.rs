//! Parses temporal formulas and checks them on a sampled signal.

use commplan::logic::{eval_stl, horizon, parse_stl, parse_stl_raw, Signal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // (position, speed) samples
    let signal = Signal::new(vec![
        vec![0.0, 2.0],
        vec![2.0, 2.0],
        vec![4.0, 1.0],
        vec![5.0, 0.5],
        vec![5.5, 0.0],
        vec![5.5, 0.0],
        vec![5.5, 0.0],
    ])?;
    // every comparison is strict: `>=` reads as `>` and `<=` as `<`
    let formulas = [
        "F[0,4](x1 > 4.9)",
        "G[0,6](x2 < 2.1)",
        // false: the left side must still hold when the right side first does
        "(x2 > 0) U[0,5] (x1 > 5.4)",
        "G[0,2](F[0,2]([1, -1] . x + 0 > 4))",
        "!(F[0,3](x1 > 5))",
    ];
    for text in formulas {
        let f = parse_stl(text)?;
        let h = horizon(&f);
        let verdicts: Vec<String> = (0..signal.len().saturating_sub(h))
            .map(|k| eval_stl(&f, &signal, k).map(|b| if b { "T" } else { "." }.to_owned()))
            .collect::<Result<_, _>>()?;
        println!("{text:<40} horizon {h}  {}", verdicts.join(""));
    }
    // negations are pushed to the predicates
    let raw = parse_stl_raw("!(G[0,2](x1 > 1 && x2 < 3))")?;
    println!("\nnormal form: {}", raw.to_nnf()?);
    Ok(())
}
