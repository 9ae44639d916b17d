"""Frozen staffing catalogs for the six-ED case study.

Each row is (18 staffing values in (ed, slot) order, expected resource-minutes
total). These exercise the exact integer arithmetic of the cost objective.
"""

AS_IS = ((4, 4, 4, 4, 5, 4, 4, 4, 3, 4, 5, 2, 4, 5, 2, 3, 3, 2), 31680)

FRONT_NO_AD = [
    ((5, 5, 3, 5, 5, 5, 5, 5, 3, 5, 5, 5, 5, 5, 5, 3, 5, 3), 39360),
    ((5, 5, 3, 5, 5, 5, 5, 5, 3, 5, 5, 5, 5, 5, 4, 5, 5, 3), 39840),
    ((5, 5, 3, 5, 5, 5, 5, 5, 4, 5, 5, 5, 5, 5, 4, 5, 5, 3), 40320),
    ((5, 5, 4, 5, 5, 5, 4, 5, 5, 5, 5, 5, 5, 5, 4, 5, 5, 3), 40800),
    ((5, 5, 4, 5, 6, 5, 5, 5, 3, 5, 5, 5, 5, 5, 5, 5, 5, 3), 41280),
    ((5, 5, 4, 5, 6, 5, 5, 5, 4, 5, 5, 5, 5, 5, 5, 5, 5, 3), 41760),
    ((5, 5, 5, 6, 6, 5, 3, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 3), 42240),
    ((5, 5, 5, 6, 6, 5, 5, 5, 5, 5, 5, 5, 5, 5, 4, 5, 5, 3), 42720),
    ((5, 5, 5, 6, 6, 5, 5, 5, 4, 5, 5, 5, 5, 5, 5, 5, 5, 4), 43200),
    ((5, 5, 5, 6, 6, 5, 5, 5, 5, 5, 5, 5, 5, 6, 5, 5, 5, 3), 43680),
    ((6, 6, 5, 6, 6, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5), 45120),
    ((6, 6, 4, 6, 6, 6, 4, 6, 6, 6, 6, 6, 6, 6, 4, 6, 6, 2), 47040),
    ((6, 6, 6, 6, 6, 6, 4, 5, 6, 6, 6, 6, 6, 6, 4, 6, 6, 2), 47520),
    ((6, 6, 4, 6, 6, 6, 4, 6, 6, 6, 6, 6, 6, 6, 6, 4, 6, 4), 48000),
    ((6, 6, 4, 6, 6, 6, 4, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 4), 48960),
    ((6, 6, 6, 6, 6, 5, 5, 6, 6, 6, 6, 5, 6, 6, 6, 6, 6, 5), 49920),
    ((6, 6, 6, 6, 6, 6, 5, 6, 6, 6, 6, 5, 6, 6, 6, 6, 6, 5), 50400),
    ((6, 6, 6, 6, 6, 6, 5, 6, 6, 6, 6, 5, 6, 6, 6, 6, 6, 6), 50880),
    ((6, 6, 6, 6, 6, 6, 5, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6), 51360),
]

FRONT_BEST_AD = [
    ((4, 5, 5, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 3), 35040),
    ((4, 5, 5, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4), 35520),
    ((5, 5, 5, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4), 36000),
    ((5, 5, 6, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4, 4), 36480),
    ((5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 2, 3, 2), 39360),
    ((5, 5, 5, 5, 5, 5, 5, 5, 3, 5, 5, 5, 5, 5, 3, 5, 5, 2), 39840),
    ((5, 5, 5, 5, 5, 5, 5, 5, 3, 5, 5, 3, 5, 5, 5, 5, 5, 3), 40320),
    ((5, 5, 5, 5, 5, 5, 5, 5, 3, 5, 5, 5, 5, 5, 4, 5, 5, 3), 40800),
    ((5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 4, 5, 5, 4, 5, 5, 4), 41760),
    ((5, 5, 5, 5, 6, 5, 5, 5, 5, 5, 5, 5, 5, 5, 4, 5, 5, 3), 42240),
    ((5, 5, 5, 6, 6, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 3), 43200),
    ((5, 5, 5, 6, 6, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5, 4), 43680),
    ((5, 5, 5, 6, 6, 5, 5, 6, 5, 5, 5, 5, 5, 5, 5, 5, 5, 5), 44640),
    ((6, 6, 6, 6, 6, 4, 6, 6, 6, 6, 6, 6, 6, 6, 6, 2, 6, 4), 48000),
    ((6, 6, 6, 6, 6, 4, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 2), 48960),
    ((6, 6, 6, 5, 6, 4, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 4), 49440),
    ((6, 6, 6, 6, 6, 6, 4, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 4), 49920),
    ((6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 3), 50400),
    ((6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 4), 50880),
    ((6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 6, 5), 51360),
]
