//! Integer division conventions shared by the ground oracle and the
//! propagators: `/` truncates toward zero, `mod` is floored (sign of the
//! divisor), `rem` is truncated (sign of the dividend).

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
}

pub(crate) fn div_wide(a: i128, b: i128) -> Option<i128> {
    (b != 0).then(|| a / b)
}

pub(crate) fn rem_wide(a: i128, b: i128) -> Option<i128> {
    (b != 0).then(|| a % b)
}

pub(crate) fn mod_wide(a: i128, b: i128) -> Option<i128> {
    let r = rem_wide(a, b)?;
    Some(if r != 0 && ((r < 0) != (b < 0)) { r + b } else { r })
}

fn narrow(v: Option<i128>) -> Result<i64, ArithError> {
    let v = v.ok_or(ArithError::DivisionByZero)?;
    i64::try_from(v).map_err(|_| ArithError::Overflow)
}

pub fn div(a: i64, b: i64) -> Result<i64, ArithError> {
    narrow(div_wide(a.into(), b.into()))
}

pub fn modulo(a: i64, b: i64) -> Result<i64, ArithError> {
    narrow(mod_wide(a.into(), b.into()))
}

pub fn rem(a: i64, b: i64) -> Result<i64, ArithError> {
    narrow(rem_wide(a.into(), b.into()))
}
