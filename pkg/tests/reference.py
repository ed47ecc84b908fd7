"""Published reference frontiers for the three-sector fixture.

Rows are ``(tau, w_bank, w_infra, w_it, risk)`` on the 1.5:0.2:3.5 grid.
"""

NOMINAL = [
    (1.5, 0.1415, 0.5545, 0.3040, 2.7788),
    (1.7, 0.1328, 0.5329, 0.3343, 2.8585),
    (1.9, 0.1242, 0.5113, 0.3645, 2.9535),
    (2.1, 0.1155, 0.4897, 0.3948, 3.0638),
    (2.3, 0.1068, 0.4680, 0.4251, 3.1893),
    (2.5, 0.0982, 0.4464, 0.4554, 3.3301),
    (2.7, 0.0895, 0.4248, 0.4857, 3.4861),
    (2.9, 0.0809, 0.4032, 0.5160, 3.6574),
    (3.1, 0.0722, 0.3815, 0.5463, 3.8440),
    (3.3, 0.0635, 0.3599, 0.5765, 4.0459),
    (3.5, 0.0549, 0.3383, 0.6068, 4.2630),
]

NORMAL = [
    (1.5, 0.1371, 0.5321, 0.3308, 2.8546),
    (1.7, 0.1290, 0.5087, 0.3623, 2.9547),
    (1.9, 0.1210, 0.4853, 0.3938, 3.0723),
    (2.1, 0.1129, 0.4617, 0.4253, 3.2075),
    (2.3, 0.1049, 0.4382, 0.4570, 3.3602),
    (2.5, 0.0968, 0.4145, 0.4887, 3.5307),
    (2.7, 0.0888, 0.3908, 0.5204, 3.7188),
    (2.9, 0.0807, 0.3671, 0.5522, 3.9248),
    (3.1, 0.0727, 0.3433, 0.5840, 4.1485),
    (3.3, 0.0646, 0.3196, 0.6158, 4.3901),
    (3.5, 0.0566, 0.2958, 0.6477, 4.6494),
]

# local optima; treated as upper bounds only
EXPONENTIAL = [
    (1.5, 0.0001, 0.6216, 0.3783, 2.9906),
    (1.7, 0.0000, 0.5963, 0.4036, 3.0447),
    (1.9, 0.0746, 0.4818, 0.4436, 3.2087),
    (2.1, 0.0000, 0.5450, 0.4550, 3.2045),
    (2.3, 0.0083, 0.4985, 0.4932, 3.3701),
    (2.5, 0.0000, 0.4933, 0.5067, 3.4324),
    (2.7, 0.0003, 0.4632, 0.5366, 3.5955),
    (2.9, 0.0006, 0.4411, 0.5583, 3.7287),
    (3.1, 0.0782, 0.3840, 0.5378, 3.8042),
    (3.3, 0.0001, 0.3758, 0.6240, 4.2021),
    (3.5, 0.0000, 0.3388, 0.6612, 4.5184),
]

# published pairwise distances between the three risk columns
D_NOMINAL_NORMAL = 0.8298
D_NOMINAL_EXPONENTIAL = 0.5621
D_NORMAL_EXPONENTIAL = 0.5195


def risks(table):
    return [row[4] for row in table]


def weights(table):
    return [row[1:4] for row in table]
