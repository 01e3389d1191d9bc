"""Built-in 64x24 "EXIT" word template (1 px per module, '#' = ink)."""

EXIT_ROWS = (
    "................................................................",
    "................................................................",
    "................................................................",
    "....############....####......####....####....##############....",
    "....############.....####....####.....####....##############....",
    "....############.....####....####.....####....##############....",
    "....############......####..####......####....##############....",
    "....####..............####..####......####.........####.........",
    "....####...............########.......####.........####.........",
    "....####................######........####.........####.........",
    "....##########..........######........####.........####.........",
    "....##########...........####.........####.........####.........",
    "....##########...........####.........####.........####.........",
    "....##########..........######........####.........####.........",
    "....####................######........####.........####.........",
    "....####...............########.......####.........####.........",
    "....####..............####..####......####.........####.........",
    "....############......####..####......####.........####.........",
    "....############.....####....####.....####.........####.........",
    "....############.....####....####.....####.........####.........",
    "....############....####......####....####.........####.........",
    "................................................................",
    "................................................................",
    "................................................................",
)
EXIT_SHA256 = "a4d28b00c1e1985f4973af0f9db416b7b1bc4730aa51a230c568f58bd8300ef5"
