"""Boundary unit conversions. Everything inside the package is SI."""

import math

KPA = 1e3
MM = 1e-3
MM2 = 1e-6

P_ATM = 101_325.0  # Pa absolute


def kpa_to_pa(x):
    return x * KPA


def pa_to_kpa(x):
    return x / KPA


def mm_to_m(x):
    return x * MM


def m_to_mm(x):
    return x / MM


def m2_to_mm2(x):
    return x / MM2


def deg_to_rad(x):
    return x * (math.pi / 180.0)


def rad_to_deg(x):
    return x * (180.0 / math.pi)


def gauge_to_abs(p_gauge, p_atm=P_ATM):
    return p_gauge + p_atm


def abs_to_gauge(p_abs, p_atm=P_ATM):
    return p_abs - p_atm
