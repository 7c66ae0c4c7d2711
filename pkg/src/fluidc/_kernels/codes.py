"""Integer opcodes shared by the pure and compiled kernels.

The Cython source mirrors these literals; keep the two in sync.
"""

K_NOT = 0
K_OR = 1
K_AND = 2
K_NOR = 3
K_NAND = 4
K_XOR = 5
K_FILTER = 6
K_TIMER = 7
K_REGISTER = 8
K_EDGE = 9
K_MUX = 10
K_DEMUX = 11
K_DIODE_F = 12
K_DIODE_B = 13
