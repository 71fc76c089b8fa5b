//! Builds a grayscale stream from odd-sized frames, round-trips it through
//! YUV4MPEG2, and prints a bundle manifest.

use roicomp::imaging::SliceImage;
use roicomp::stream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (w, h) = (45, 31);
    let frames: Vec<SliceImage> = (0..5u8)
        .map(|t| SliceImage::new(w, h, (0..w * h).map(|i| (i as u8).wrapping_mul(3).wrapping_add(t * 40)).collect()))
        .collect::<Result<_, _>>()?;

    let (raw, pad) = stream::assemble(&frames)?;
    println!("{}x{} padded to {}x{} (+{} right, +{} bottom)", w, h, raw.width, raw.height, pad.right, pad.bottom);

    let y4m = stream::write_y4m(&raw);
    let header_end = y4m.iter().position(|&b| b == b'\n').unwrap_or(0);
    println!("header: {}", String::from_utf8_lossy(&y4m[..header_end]));
    println!("{} frames, {} bytes", raw.frame_count(), y4m.len());

    let back = stream::read_y4m(&y4m)?;
    let unpadded = stream::disassemble(&back, w, h)?;
    println!("round trip identical: {}", unpadded == frames);

    match stream::read_y4m(b"YUV4MPEG2 W4 H4 F25:1 C420jpeg\nFRAME\n") {
        Ok(_) => println!("color input accepted?"),
        Err(e) => println!("color input rejected: {e}"),
    }
    Ok(())
}
