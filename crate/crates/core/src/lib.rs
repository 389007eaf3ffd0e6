pub mod arith;
pub mod fourrank;
pub mod gf2;
pub mod localsym;
pub mod forms;
pub mod survey;
pub mod output;
pub mod verify;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/symbols.md")]
    mod symbols {}
    #[doc = include_str!("../../../book/src/matrix.md")]
    mod matrix {}
    #[doc = include_str!("../../../book/src/forms.md")]
    mod forms {}
    #[doc = include_str!("../../../book/src/surveys.md")]
    mod surveys {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
