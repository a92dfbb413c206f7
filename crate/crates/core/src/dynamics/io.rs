//! Binary state snapshots and trajectory CSV.
//!
//! Snapshot layout, all integers and doubles little-endian:
//!
//! ```text
//! magic      4 bytes  "WSNP"
//! version    u32      1
//! form       u32      0 = ket, 1 = density matrix
//! k          u32      number of subsystems
//! k times:   u32 dim, u8 kind (0 qutrit, 1 cavity), u8 label length, label bytes (UTF-8)
//! basis_len  u64      0 for the full product space, else the number of kept states
//! basis      basis_len × u64 product-space indices
//! data       D (ket) or D×D row-major (density) complex numbers as (re f64, im f64)
//! ```

use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::evolve::Checkpoint;
use crate::error::{Error, Result};
use crate::hilbert::{HilbertLayout, QuantumState, StateData, Subsystem, SubsystemKind};
use crate::units::format_sig;

const MAGIC: &[u8; 4] = b"WSNP";
const VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(mut w: W, state: &QuantumState) -> Result<()> {
    let layout = state.layout();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let form: u32 = match state.data() {
        StateData::Ket(_) => 0,
        StateData::Density(_) => 1,
    };
    w.write_all(&form.to_le_bytes())?;
    w.write_all(&(layout.subsystems().len() as u32).to_le_bytes())?;
    for s in layout.subsystems() {
        w.write_all(&(s.dim as u32).to_le_bytes())?;
        let kind: u8 = match s.kind {
            SubsystemKind::Qutrit => 0,
            SubsystemKind::Cavity => 1,
        };
        let label = s.label.as_bytes();
        let len = u8::try_from(label.len()).map_err(|_| Error::Snapshot(format!("label `{}` too long", s.label)))?;
        w.write_all(&[kind, len])?;
        w.write_all(label)?;
    }
    let basis = layout.basis().unwrap_or(&[]);
    w.write_all(&(basis.len() as u64).to_le_bytes())?;
    for &b in basis {
        w.write_all(&(b as u64).to_le_bytes())?;
    }
    let mut put = |z: C64| -> Result<()> {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
        Ok(())
    };
    match state.data() {
        StateData::Ket(v) => v.iter().try_for_each(|&z| put(z))?,
        StateData::Density(m) => {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    put(m[(i, j)])?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<QuantumState> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic, not a state snapshot".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported snapshot version {version}")));
    }
    let form = read_u32(&mut r)?;
    let k = read_u32(&mut r)? as usize;
    let mut subs = Vec::with_capacity(k);
    for _ in 0..k {
        let dim = read_u32(&mut r)? as usize;
        let mut head = [0u8; 2];
        r.read_exact(&mut head)?;
        let kind = match head[0] {
            0 => SubsystemKind::Qutrit,
            1 => SubsystemKind::Cavity,
            x => return Err(Error::Snapshot(format!("unknown subsystem kind {x}"))),
        };
        let mut label = vec![0u8; head[1] as usize];
        r.read_exact(&mut label)?;
        let label = String::from_utf8(label).map_err(|_| Error::Snapshot("label is not UTF-8".into()))?;
        subs.push(Subsystem::new(label, kind, dim));
    }
    let mut layout = HilbertLayout::new(subs)?;
    let basis_len = read_u64(&mut r)? as usize;
    if basis_len > 0 {
        let basis = (0..basis_len).map(|_| read_u64(&mut r).map(|b| b as usize)).collect::<Result<Vec<_>>>()?;
        layout = layout.restricted(basis)?;
    }
    let layout = Arc::new(layout);
    let d = layout.dim();
    let mut get = || -> Result<C64> {
        let re = f64::from_le_bytes(read_array(&mut r)?);
        let im = f64::from_le_bytes(read_array(&mut r)?);
        Ok(C64::new(re, im))
    };
    match form {
        0 => {
            let v = (0..d).map(|_| get()).collect::<Result<Vec<_>>>()?;
            QuantumState::ket(layout, DVector::from_vec(v))
        }
        1 => {
            let v = (0..d * d).map(|_| get()).collect::<Result<Vec<_>>>()?;
            QuantumState::density(layout, DMatrix::from_row_slice(d, d, &v))
        }
        x => Err(Error::Snapshot(format!("unknown state form {x}"))),
    }
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

/// CSV with header `time_ns,trace,min_eig,fidelity`; missing values are
/// left empty.
pub fn write_trajectory<W: Write>(mut w: W, checkpoints: &[Checkpoint]) -> Result<()> {
    writeln!(w, "time_ns,trace,min_eig,fidelity")?;
    let opt = |x: Option<f64>| x.map(|v| format_sig(v, 12)).unwrap_or_default();
    for c in checkpoints {
        writeln!(
            w,
            "{},{},{},{}",
            format_sig(c.time * 1e9, 12),
            format_sig(c.trace, 12),
            opt(c.min_eig),
            opt(c.fidelity)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(state: &QuantumState) -> QuantumState {
        let mut buf = Vec::new();
        write_snapshot(&mut buf, state).unwrap();
        read_snapshot(buf.as_slice()).unwrap()
    }

    #[test]
    fn ket_and_density_roundtrip() {
        let l = Arc::new(HilbertLayout::device(2, 3, 2).unwrap());
        let v = DVector::from_fn(l.dim(), |i, _| C64::new(i as f64 * 0.01, -(i as f64) * 1e-3));
        let ket = QuantumState::ket(l.clone(), v).unwrap();
        let back = roundtrip(&ket);
        assert_eq!(back.as_ket(), ket.as_ket());
        assert_eq!(**back.layout(), *l);
        let rho = ket.to_density();
        assert_eq!(roundtrip(&rho).as_density(), rho.as_density());
    }

    #[test]
    fn restricted_roundtrip() {
        let full = HilbertLayout::device(2, 2, 2).unwrap();
        let l = Arc::new(full.restricted(vec![0, 3, 17]).unwrap());
        let ket = QuantumState::basis_ket(l.clone(), 17).unwrap();
        let back = roundtrip(&ket);
        assert_eq!(back.layout().basis(), Some(&[0usize, 3, 17][..]));
        assert_eq!(back.as_ket(), ket.as_ket());
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_snapshot(&b"NOPE0000"[..]), Err(Error::Snapshot(_))));
        assert!(read_snapshot(&b"WS"[..]).is_err());
    }

    #[test]
    fn trajectory_csv() {
        let rows = [
            Checkpoint {
                time: 3.2e-8,
                trace: 1.0,
                min_eig: Some(-1.5e-12),
                fidelity: Some(0.974861),
            },
            Checkpoint {
                time: 0.0,
                trace: 1.0,
                min_eig: None,
                fidelity: None,
            },
        ];
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "time_ns,trace,min_eig,fidelity\n32,1,-1.5e-12,0.974861\n0,1,,\n");
    }
}
