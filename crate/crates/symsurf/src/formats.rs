//! On-disk formats: images, depth maps, point clouds, meshes, cameras,
//! splits, checkpoints and logs.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use symsurf_core::camera::Camera;
use symsurf_core::init::PointCloud;
use symsurf_core::model::{ModelConfig, SceneModel};
use symsurf_core::scene::{OracleImage, SplitIds};
use symsurf_core::sdf::{EllipsoidInit, GroundPlane, Mesh};
use symsurf_core::symmetry::{RigidFrame, SymmetrySet, SymmetrySpec, SymmetryVariant};
use symsurf_core::{Mat3, Mat4, Vec3};

use crate::config::{apply_model, model_text, KeyValues};
use crate::experiment::Dataset;
use crate::Error;

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// `read_to_string` with the path in the error.
pub fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File, Error> {
    File::open(path).map_err(|e| bad(format!("{}: {e}", path.display())))
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// 8-bit RGB PNG of linear values clamped to `[0, 1]`.
pub fn write_png_rgb(path: &Path, width: usize, height: usize, rgb: &[Vec3]) -> Result<(), Error> {
    let data: Vec<u8> = rgb.iter().flat_map(|c| [to_byte(c.x), to_byte(c.y), to_byte(c.z)]).collect();
    write_png(path, width, height, png::ColorType::Rgb, &data)
}

pub fn write_png_mask(path: &Path, width: usize, height: usize, mask: &[bool]) -> Result<(), Error> {
    let data: Vec<u8> = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    write_png(path, width, height, png::ColorType::Grayscale, &data)
}

fn write_png(path: &Path, width: usize, height: usize, colour: png::ColorType, data: &[u8]) -> Result<(), Error> {
    let mut enc = png::Encoder::new(BufWriter::new(File::create(path)?), width as u32, height as u32);
    enc.set_color(colour);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header().map_err(|e| bad(format!("{}: {e}", path.display())))?;
    w.write_image_data(data).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Reads an 8-bit PNG as `(width, height, channels, bytes)`.
fn read_png(path: &Path) -> Result<(usize, usize, usize, Vec<u8>), Error> {
    let dec = png::Decoder::new(BufReader::new(open(path)?));
    let mut reader = dec.read_info().map_err(|e| bad(format!("{}: {e}", path.display())))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(bad(format!("{}: only 8-bit images are supported", path.display())));
    }
    let channels = info.color_type.samples();
    buf.truncate(info.buffer_size());
    Ok((info.width as usize, info.height as usize, channels, buf))
}

pub fn read_png_rgb(path: &Path) -> Result<(usize, usize, Vec<Vec3>), Error> {
    let (w, h, c, buf) = read_png(path)?;
    if c < 3 {
        return Err(bad(format!("{}: expected an RGB image", path.display())));
    }
    let px = buf.chunks(c).map(|p| Vec3::new(p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0)).collect();
    Ok((w, h, px))
}

pub fn read_png_mask(path: &Path) -> Result<(usize, usize, Vec<bool>), Error> {
    let (w, h, c, buf) = read_png(path)?;
    Ok((w, h, buf.chunks(c).map(|p| p[0] >= 128).collect()))
}

/// Single-channel little-endian PFM (rows stored bottom to top).
pub fn write_pfm(path: &Path, width: usize, height: usize, values: &[f64]) -> Result<(), Error> {
    let mut f = BufWriter::new(File::create(path)?);
    write!(f, "Pf\n{width} {height}\n-1.0\n")?;
    for row in (0..height).rev() {
        for v in &values[row * width..(row + 1) * width] {
            f.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_pfm(path: &Path) -> Result<(usize, usize, Vec<f64>), Error> {
    let mut bytes = Vec::new();
    open(path)?.read_to_end(&mut bytes)?;
    // Three whitespace-terminated header lines.
    let mut pos = 0;
    let mut header = Vec::new();
    for _ in 0..3 {
        let end = bytes[pos..].iter().position(|&b| b == b'\n').ok_or_else(|| bad("truncated pfm header"))? + pos;
        header.push(String::from_utf8_lossy(&bytes[pos..end]).trim().to_string());
        pos = end + 1;
    }
    if header[0] != "Pf" {
        return Err(bad(format!("{}: not a single-channel pfm", path.display())));
    }
    let dims: Vec<usize> = header[1].split_whitespace().filter_map(|s| s.parse().ok()).collect();
    let scale: f64 = header[2].parse().map_err(|_| bad("bad pfm scale"))?;
    let [w, h] = dims[..] else { return Err(bad("bad pfm size")) };
    let data = &bytes[pos..];
    if data.len() != w * h * 4 {
        return Err(bad(format!("{}: expected {} bytes of pixels", path.display(), w * h * 4)));
    }
    let mut out = vec![0.0; w * h];
    for (i, c) in data.chunks(4).enumerate() {
        let b = [c[0], c[1], c[2], c[3]];
        let v = if scale < 0.0 { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (row, col) = (h - 1 - i / w, i % w);
        out[row * w + col] = v as f64;
    }
    Ok((w, h, out))
}

/// ASCII PLY with vertices and optional triangles.
pub fn write_ply(path: &Path, vertices: &[Vec3], triangles: &[[u32; 3]]) -> Result<(), Error> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "ply\nformat ascii 1.0\nelement vertex {}", vertices.len())?;
    writeln!(f, "property double x\nproperty double y\nproperty double z")?;
    if !triangles.is_empty() {
        writeln!(f, "element face {}\nproperty list uchar int vertex_indices", triangles.len())?;
    }
    writeln!(f, "end_header")?;
    for v in vertices {
        writeln!(f, "{} {} {}", v.x, v.y, v.z)?;
    }
    for t in triangles {
        writeln!(f, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

/// Vertices of an ASCII PLY written by [`write_ply`] (faces are ignored).
pub fn read_ply_points(path: &Path) -> Result<Vec<Vec3>, Error> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let mut n = None;
    for line in lines.by_ref() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("element vertex") {
            n = rest.trim().parse().ok();
        }
        if line == "format binary_little_endian 1.0" || line == "format binary_big_endian 1.0" {
            return Err(bad(format!("{}: only ascii ply is supported", path.display())));
        }
        if line == "end_header" {
            break;
        }
    }
    let n: usize = n.ok_or_else(|| bad(format!("{}: no vertex element", path.display())))?;
    let mut pts = Vec::with_capacity(n);
    for line in lines.take(n) {
        let v: Vec<f64> = line.split_whitespace().take(3).map(|s| s.parse().map_err(|_| bad("bad ply vertex"))).collect::<Result<_, _>>()?;
        if v.len() != 3 {
            return Err(bad("bad ply vertex"));
        }
        pts.push(Vec3::new(v[0], v[1], v[2]));
    }
    if pts.len() != n {
        return Err(bad(format!("{}: truncated vertex list", path.display())));
    }
    Ok(pts)
}

pub fn write_obj(path: &Path, mesh: &Mesh) -> Result<(), Error> {
    let mut f = BufWriter::new(File::create(path)?);
    for v in &mesh.vertices {
        writeln!(f, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(f, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

/// One line per frame: id, 9 intrinsics and 16 world-to-camera values,
/// both row-major. Image sizes come from the images themselves.
pub fn cameras_text(cameras: &[(usize, Camera)]) -> String {
    let mut s = String::from("# id K(3x3, row-major) world_to_camera(4x4, row-major)\n");
    for (id, c) in cameras {
        let k = c.intrinsics.m.iter().flatten();
        let e = c.world_to_camera.m.iter().flatten();
        let vals: Vec<String> = k.chain(e).map(|v| v.to_string()).collect();
        s.push_str(&format!("{id} {}\n", vals.join(" ")));
    }
    s
}

/// Parses camera lines into `(id, intrinsics, world_to_camera)`.
pub fn parse_cameras(text: &str) -> Result<Vec<(usize, Mat3, Mat4)>, Error> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let id: usize = tok.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad(format!("cameras line {}: bad id", n + 1)))?;
        let vals: Vec<f64> = tok.map(|t| t.parse().map_err(|_| bad(format!("cameras line {}: bad number", n + 1)))).collect::<Result<_, _>>()?;
        if vals.len() != 25 {
            return Err(bad(format!("cameras line {}: expected 25 numbers, got {}", n + 1, vals.len())));
        }
        let mut k = [[0.0; 3]; 3];
        let mut e = [[0.0; 4]; 4];
        for i in 0..9 {
            k[i / 3][i % 3] = vals[i];
        }
        for i in 0..16 {
            e[i / 4][i % 4] = vals[9 + i];
        }
        out.push((id, Mat3 { m: k }, Mat4 { m: e }));
    }
    Ok(out)
}

pub fn split_text(split: &SplitIds) -> String {
    let j = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
    format!("train {}\ntest {}\nwithheld {}\n", j(&split.train), j(&split.test), j(&split.withheld))
}

pub fn parse_split(text: &str) -> Result<SplitIds, Error> {
    let mut s = SplitIds { train: Vec::new(), test: Vec::new(), withheld: Vec::new() };
    for line in text.lines() {
        let mut tok = line.split_whitespace();
        let slot = match tok.next() {
            Some("train") => &mut s.train,
            Some("test") => &mut s.test,
            Some("withheld") => &mut s.withheld,
            None => continue,
            Some(other) => return Err(bad(format!("split: unknown list `{other}`"))),
        };
        *slot = tok.map(|t| t.parse().map_err(|_| bad("split: bad frame id"))).collect::<Result<_, _>>()?;
    }
    Ok(s)
}

fn frame_name(id: usize, ext: &str) -> String {
    format!("frame{id:06}.{ext}")
}

/// Writes `cameras.txt`, `split.txt`, `rgb/`, `depth/`, `mask/` and `cloud.ply`.
pub fn save_dataset(dir: &Path, data: &Dataset) -> Result<(), Error> {
    for sub in ["rgb", "depth", "mask"] {
        fs::create_dir_all(dir.join(sub))?;
    }
    let cams: Vec<(usize, Camera)> = data.cameras.iter().copied().enumerate().collect();
    fs::write(dir.join("cameras.txt"), cameras_text(&cams))?;
    fs::write(dir.join("split.txt"), split_text(&data.split))?;
    for (id, img) in data.images.iter().enumerate() {
        write_png_rgb(&dir.join("rgb").join(frame_name(id, "png")), img.width, img.height, &img.rgb)?;
        write_pfm(&dir.join("depth").join(frame_name(id, "pfm")), img.width, img.height, &img.depth)?;
        write_png_mask(&dir.join("mask").join(frame_name(id, "png")), img.width, img.height, &img.mask)?;
    }
    if let Some(cloud) = &data.cloud {
        write_ply(&dir.join("cloud.ply"), &cloud.points, &[])?;
    }
    Ok(())
}

/// Loads a dataset directory. Camera ids must be `0..n` in order; depth and
/// mask maps are optional per frame (zero depth, empty mask when absent).
pub fn load_dataset(dir: &Path) -> Result<Dataset, Error> {
    let cams = parse_cameras(&read_text(&dir.join("cameras.txt"))?)?;
    let split = parse_split(&read_text(&dir.join("split.txt"))?)?;
    let mut cameras = Vec::with_capacity(cams.len());
    let mut images = Vec::with_capacity(cams.len());
    for (expect, (id, k, e)) in cams.into_iter().enumerate() {
        if id != expect {
            return Err(bad(format!("cameras.txt: expected frame id {expect}, got {id}")));
        }
        let (w, h, rgb) = read_png_rgb(&dir.join("rgb").join(frame_name(id, "png")))?;
        let depth_path = dir.join("depth").join(frame_name(id, "pfm"));
        let depth = if depth_path.exists() { read_pfm(&depth_path)?.2 } else { vec![0.0; w * h] };
        let mask_path = dir.join("mask").join(frame_name(id, "png"));
        let mask = if mask_path.exists() { read_png_mask(&mask_path)?.2 } else { vec![false; w * h] };
        if depth.len() != w * h || mask.len() != w * h {
            return Err(bad(format!("frame {id}: depth or mask size differs from the image")));
        }
        cameras.push(Camera::new(k, e, w, h)?);
        images.push(OracleImage { width: w, height: h, rgb, depth, mask });
    }
    let n = cameras.len();
    if split.train.iter().chain(&split.test).chain(&split.withheld).any(|&i| i >= n) {
        return Err(bad("split.txt references a frame that does not exist"));
    }
    let cloud_path = dir.join("cloud.ply");
    let cloud = if cloud_path.exists() { Some(PointCloud::new(read_ply_points(&cloud_path)?)?) } else { None };
    Ok(Dataset { cameras, images, cloud, split })
}

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn unhex(s: &str) -> Result<f64, Error> {
    u64::from_str_radix(s, 16).map(f64::from_bits).map_err(|_| bad(format!("checkpoint: bad value `{s}`")))
}

fn hex_vec(v: Vec3) -> String {
    format!("{} {} {}", hex(v.x), hex(v.y), hex(v.z))
}

fn symmetry_line(spec: &SymmetrySpec) -> String {
    let params = match spec.variant {
        SymmetryVariant::PlanarReflection { normal, offset } => format!("{} {}", hex_vec(normal), hex(offset)),
        SymmetryVariant::LineReflection { direction, plane_offset } => {
            format!("{} {} {}", hex_vec(direction), hex(plane_offset[0]), hex(plane_offset[1]))
        }
        SymmetryVariant::PointReflection { center } => hex_vec(center),
        SymmetryVariant::Rotation { point, axis, order } => format!("{} {} {order}", hex_vec(point), hex_vec(axis)),
        SymmetryVariant::Spherical { center } => hex_vec(center),
        SymmetryVariant::Translation { offset } => hex_vec(offset),
        SymmetryVariant::Scale { sx, sy } => format!("{} {}", hex(sx), hex(sy)),
    };
    let rot: Vec<String> = spec.frame.rotation.m.iter().flatten().map(|v| hex(*v)).collect();
    format!("symmetry {} {params} frame {} {}", spec.variant.name(), rot.join(" "), hex_vec(spec.frame.translation))
}

fn parse_symmetry(line: &str) -> Result<SymmetrySpec, Error> {
    let tok: Vec<&str> = line.split_whitespace().collect();
    let frame_at = tok.iter().position(|t| *t == "frame").ok_or_else(|| bad("checkpoint: symmetry without frame"))?;
    let p = &tok[2..frame_at];
    let f = &tok[frame_at + 1..];
    let want = |n: usize, got: &[&str]| if got.len() == n { Ok(()) } else { Err(bad("checkpoint: wrong symmetry parameter count")) };
    let v3 = |s: &[&str]| -> Result<Vec3, Error> { Ok(Vec3::new(unhex(s[0])?, unhex(s[1])?, unhex(s[2])?)) };
    let variant = match tok.get(1).copied() {
        Some("planar_reflection") => {
            want(4, p)?;
            SymmetryVariant::PlanarReflection { normal: v3(&p[0..3])?, offset: unhex(p[3])? }
        }
        Some("line_reflection") => {
            want(5, p)?;
            SymmetryVariant::LineReflection { direction: v3(&p[0..3])?, plane_offset: [unhex(p[3])?, unhex(p[4])?] }
        }
        Some("point_reflection") => {
            want(3, p)?;
            SymmetryVariant::PointReflection { center: v3(p)? }
        }
        Some("rotation") => {
            want(7, p)?;
            let order = p[6].parse().map_err(|_| bad("checkpoint: bad rotation order"))?;
            SymmetryVariant::Rotation { point: v3(&p[0..3])?, axis: v3(&p[3..6])?, order }
        }
        Some("spherical") => {
            want(3, p)?;
            SymmetryVariant::Spherical { center: v3(p)? }
        }
        Some("translation") => {
            want(3, p)?;
            SymmetryVariant::Translation { offset: v3(p)? }
        }
        Some("scale") => {
            want(2, p)?;
            SymmetryVariant::Scale { sx: unhex(p[0])?, sy: unhex(p[1])? }
        }
        other => return Err(bad(format!("checkpoint: unknown symmetry `{}`", other.unwrap_or("")))),
    };
    want(12, f)?;
    let mut r = [[0.0; 3]; 3];
    for i in 0..9 {
        r[i / 3][i % 3] = unhex(f[i])?;
    }
    let frame = RigidFrame { rotation: Mat3 { m: r }, translation: v3(&f[9..12])? };
    SymmetrySpec::new(variant, frame).map_err(|e| bad(format!("checkpoint: {e}")))
}

const CHECKPOINT_MAGIC: &str = "symsurf-checkpoint 1";

/// Text checkpoint: model config, ground axis, symmetry specs and every
/// trainable value as raw f64 bits, so a reload is bit-exact.
pub fn checkpoint_text(model: &SceneModel, iteration: usize) -> String {
    let mut s = format!("{CHECKPOINT_MAGIC}\niteration {iteration}\n");
    s.push_str(&model_text(model.config()));
    match model.ground() {
        Some(g) => s.push_str(&format!("ground {} {}\n", hex(g.height), hex_vec(g.up))),
        None => s.push_str("ground none\n"),
    }
    for spec in model.symmetry.specs() {
        s.push_str(&symmetry_line(spec));
        s.push('\n');
    }
    let values = model.store.values();
    s.push_str(&format!("values {}\n", values.len()));
    for v in values {
        s.push_str(&hex(*v));
        s.push('\n');
    }
    s
}

/// Rebuilds a model from [`checkpoint_text`]; returns it with the iteration.
pub fn parse_checkpoint(text: &str) -> Result<(SceneModel, usize), Error> {
    let mut lines = text.lines();
    if lines.next() != Some(CHECKPOINT_MAGIC) {
        return Err(bad("not a symsurf checkpoint"));
    }
    let mut iteration = 0;
    let mut model_kv = String::new();
    let mut ground = None;
    let mut specs = Vec::new();
    let mut n_values = None;
    for line in lines.by_ref() {
        if let Some(rest) = line.strip_prefix("iteration ") {
            iteration = rest.trim().parse().map_err(|_| bad("checkpoint: bad iteration"))?;
        } else if line.starts_with("model.") {
            model_kv.push_str(line);
            model_kv.push('\n');
        } else if let Some(rest) = line.strip_prefix("ground ") {
            let t: Vec<&str> = rest.split_whitespace().collect();
            if t != ["none"] {
                if t.len() != 4 {
                    return Err(bad("checkpoint: bad ground line"));
                }
                let up = Vec3::new(unhex(t[1])?, unhex(t[2])?, unhex(t[3])?);
                ground = Some(GroundPlane::new(unhex(t[0])?, up)?);
            }
        } else if line.starts_with("symmetry ") {
            specs.push(parse_symmetry(line)?);
        } else if let Some(rest) = line.strip_prefix("values ") {
            n_values = Some(rest.trim().parse::<usize>().map_err(|_| bad("checkpoint: bad value count"))?);
            break;
        } else {
            return Err(bad(format!("checkpoint: unexpected line `{line}`")));
        }
    }
    let n = n_values.ok_or_else(|| bad("checkpoint: missing values"))?;
    let values: Vec<f64> = lines.map(unhex).collect::<Result<_, _>>()?;
    if values.len() != n {
        return Err(bad(format!("checkpoint: expected {n} values, found {}", values.len())));
    }
    let mut config = ModelConfig::desk();
    let mut kv = KeyValues::parse(&model_kv)?;
    apply_model(&mut config, &mut kv)?;
    kv.finish()?;
    let sym = SymmetrySet::new(specs).map_err(|e| bad(format!("checkpoint: {e}")))?;
    // The initialization is overwritten below; any valid prior will do.
    let prior = EllipsoidInit::new(Vec3::ZERO, Vec3::splat(0.5))?;
    let mut model = SceneModel::new(config, &prior, ground, sym, &mut ChaCha8Rng::seed_from_u64(0))?;
    if model.store.len() != n {
        return Err(bad(format!("checkpoint: config implies {} values, file has {n}", model.store.len())));
    }
    model.store.values_mut().copy_from_slice(&values);
    Ok((model, iteration))
}

pub fn save_checkpoint(path: &Path, model: &SceneModel, iteration: usize) -> Result<(), Error> {
    // Write then rename so an interrupted save never clobbers the last good one.
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, checkpoint_text(model, iteration))?;
    fs::rename(tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(SceneModel, usize), Error> {
    parse_checkpoint(&read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pfm");
        let vals: Vec<f64> = (0..6).map(|i| i as f64 * 0.25).collect();
        write_pfm(&p, 3, 2, &vals).unwrap();
        assert_eq!(read_pfm(&p).unwrap(), (3, 2, vals));
    }

    #[test]
    fn png_round_trip_is_quantized() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.png");
        let px = vec![Vec3::new(0.0, 0.5, 1.0), Vec3::new(2.0, -1.0, 0.2)];
        write_png_rgb(&p, 2, 1, &px).unwrap();
        let (w, h, back) = read_png_rgb(&p).unwrap();
        assert_eq!((w, h), (2, 1));
        assert_eq!(back[0], Vec3::new(0.0, 128.0 / 255.0, 1.0));
        assert_eq!(back[1], Vec3::new(1.0, 0.0, 51.0 / 255.0));
        let m = dir.path().join("m.png");
        write_png_mask(&m, 2, 1, &[true, false]).unwrap();
        assert_eq!(read_png_mask(&m).unwrap().2, vec![true, false]);
    }

    #[test]
    fn cameras_and_split_round_trip() {
        let k = Camera::intrinsics_from_fov(64, 48, 40.0);
        let c = Camera::look_at(Vec3::new(2.0, 0.3, 0.7), Vec3::ZERO, Vec3::Z, k, 64, 48).unwrap();
        let back = parse_cameras(&cameras_text(&[(0, c), (1, c)])).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!((back[1].1, back[1].2), (c.intrinsics, c.world_to_camera));
        assert!(parse_cameras("0 1 2 3").is_err());
        let s = SplitIds { train: vec![1, 2], test: vec![0], withheld: vec![0, 3] };
        assert_eq!(parse_split(&split_text(&s)).unwrap(), s);
    }

    #[test]
    fn ply_points_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.ply");
        let pts = vec![Vec3::new(0.1, -0.2, 1.0 / 3.0), Vec3::new(5.0, 6.0, 7.0)];
        write_ply(&p, &pts, &[[0, 1, 0]]).unwrap();
        assert_eq!(read_ply_points(&p).unwrap(), pts);
    }
}
