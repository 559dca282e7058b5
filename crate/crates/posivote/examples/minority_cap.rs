//! How large a minority can be before it stops looking like a tail of the
//! majority: cap(r, s) = erfc(|r − 1| / (√2 s)).

use posivote::minority_cap;

fn main() -> Result<(), posivote::Error> {
    let s_values = [0.2, 0.5, 0.8];
    print!("{:>5}", "r");
    for s in s_values {
        print!("  {:>9}", format!("s={s}"));
    }
    println!();
    for i in 0..=10 {
        let r = i as f64 * 0.2;
        print!("{r:>5.1}");
        for s in s_values {
            print!("  {:>9.6}", minority_cap(r, s)?);
        }
        println!();
    }
    Ok(())
}
