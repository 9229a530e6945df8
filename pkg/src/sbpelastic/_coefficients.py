# Generated by tools/derive_coefficients.py -- do not edit by hand.
from fractions import Fraction

TABLES = {
    2: {
        'h': [Fraction(1, 2), Fraction(1, 1)],
        'd1_closure': [[Fraction(-1, 1), Fraction(1, 1), Fraction(0, 1)], [Fraction(-1, 2), Fraction(0, 1), Fraction(1, 2)]],
        'd1_interior': [Fraction(-1, 2), Fraction(0, 1), Fraction(1, 2)],
        's_row': [Fraction(-3, 2), Fraction(2, 1), Fraction(-1, 2)],
        'gamma': {
            2: [Fraction(0, 1), Fraction(1, 4), Fraction(0, 1)],
        },
    },
    4: {
        'h': [Fraction(17, 48), Fraction(59, 48), Fraction(43, 48), Fraction(49, 48)],
        'd1_closure': [[Fraction(-24, 17), Fraction(59, 34), Fraction(-4, 17), Fraction(-3, 34), Fraction(0, 1), Fraction(0, 1)], [Fraction(-1, 2), Fraction(0, 1), Fraction(1, 2), Fraction(0, 1), Fraction(0, 1), Fraction(0, 1)], [Fraction(4, 43), Fraction(-59, 86), Fraction(0, 1), Fraction(59, 86), Fraction(-4, 43), Fraction(0, 1)], [Fraction(3, 98), Fraction(0, 1), Fraction(-59, 98), Fraction(0, 1), Fraction(32, 49), Fraction(-4, 49)]],
        'd1_interior': [Fraction(1, 12), Fraction(-2, 3), Fraction(0, 1), Fraction(2, 3), Fraction(-1, 12)],
        's_row': [Fraction(-11, 6), Fraction(3, 1), Fraction(-3, 2), Fraction(1, 3)],
        'gamma': {
            3: [Fraction(0, 1), Fraction(1, 36), Fraction(1, 36), Fraction(0, 1)],
            4: [Fraction(0, 1), Fraction(0, 1), Fraction(1, 144), Fraction(0, 1), Fraction(0, 1)],
        },
    },
    6: {
        'h': [Fraction(13649, 43200), Fraction(12013, 8640), Fraction(2711, 4320), Fraction(5359, 4320), Fraction(7877, 8640), Fraction(43801, 43200)],
        'd1_closure': [[Fraction(-21600, 13649), Fraction(24251327, 12038418), Fraction(-794249, 12038418), Fraction(-1131016, 2006403), Fraction(2167213, 12038418), Fraction(213005, 12038418), Fraction(0, 1), Fraction(0, 1), Fraction(0, 1)], [Fraction(-24251327, 52977330), Fraction(0, 1), Fraction(1294484, 5297733), Fraction(3651619, 10595466), Fraction(-471427, 3531822), Fraction(119797, 52977330), Fraction(0, 1), Fraction(0, 1), Fraction(0, 1)], [Fraction(794249, 23911020), Fraction(-647242, 1195551), Fraction(0, 1), Fraction(497450, 1195551), Fraction(799819, 4782204), Fraction(-149792, 1992585), Fraction(0, 1), Fraction(0, 1), Fraction(0, 1)], [Fraction(565508, 3938865), Fraction(-3651619, 9453276), Fraction(-497450, 2363319), Fraction(0, 1), Fraction(1115878, 2363319), Fraction(-1531601, 47266380), Fraction(72, 5359), Fraction(0, 1), Fraction(0, 1)], [Fraction(-2167213, 34737570), Fraction(471427, 2315838), Fraction(-799819, 6947514), Fraction(-2231756, 3473757), Fraction(0, 1), Fraction(26492783, 34737570), Fraction(-1296, 7877), Fraction(144, 7877), Fraction(0, 1)], [Fraction(-213005, 38632482), Fraction(-119797, 38632482), Fraction(299584, 6438747), Fraction(1531601, 38632482), Fraction(-26492783, 38632482), Fraction(0, 1), Fraction(32400, 43801), Fraction(-6480, 43801), Fraction(720, 43801)]],
        'd1_interior': [Fraction(-1, 60), Fraction(3, 20), Fraction(-3, 4), Fraction(0, 1), Fraction(3, 4), Fraction(-3, 20), Fraction(1, 60)],
        's_row': [Fraction(-25, 12), Fraction(4, 1), Fraction(-3, 1), Fraction(4, 3), Fraction(-1, 4)],
        'gamma': {
            4: [Fraction(0, 1), Fraction(1, 240), Fraction(1, 240), Fraction(1, 240), Fraction(0, 1)],
            5: [Fraction(0, 1), Fraction(0, 1), Fraction(1, 1200), Fraction(1, 1200), Fraction(0, 1), Fraction(0, 1)],
            6: [Fraction(0, 1), Fraction(0, 1), Fraction(0, 1), Fraction(1, 3600), Fraction(0, 1), Fraction(0, 1), Fraction(0, 1)],
        },
    },
}
