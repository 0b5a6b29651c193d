"""Frozen oracle values for the test suite.

Generated by running ``tests/oracles.py`` (mpmath, ~30 significant digits;
all of that script's self-checks passed at generation time).  Regenerate by
piping the script's output through the dict blocks below.

Keys
----
LATTICE_G
    ("s", (dx, dy)) -> G_delta(s): infinite-lattice stiffness entry per unit
    h^(2-2s) for lattice offset delta = (dx, dy); symmetry gives the other
    offsets: (dx,dy) ~ (dy,dx) ~ (-dx,-dy) ~ (-dy,-dx).
SQUARE_RHO
    ("s", (x, y)) -> integral over the complement of (-1,1)^2 of
    |x - y'|^(-2-2s) dy'.
C_DS
    (d, "s") -> normalisation constant C(d, s) of the integral fractional
    Laplacian.
DISK_SOLUTION
    "s" -> (c_s, energy): solution scale c_s = 1/(4^s Gamma(1+s)^2) and
    squared energy norm pi*c_s/(1+s) of the exact unit-disk solution
    u = c_s (1 - |x|^2)^s for f = 1.
"""

LATTICE_G = {
    ("0.1", (0, 0)): 0.5745372050624577158622,
    ("0.1", (1, 0)): 0.06289351622238045525995,
    ("0.1", (1, 1)): 0.0771708563162012353849,
    ("0.1", (1, -1)): -0.01704745239204157784396,
    ("0.1", (2, 0)): -0.008849813503366129912593,
    ("0.1", (2, 1)): -0.008267750576399500862957,
    ("0.1", (2, -1)): -0.005803081796898944310822,
    ("0.1", (2, 2)): -0.004258323768021244129784,
    ("0.1", (2, -2)): -0.003337759080487161605087,
    ("0.25", (0, 0)): 0.7289920444367038362193,
    ("0.25", (1, 0)): 0.02252824238376824441302,
    ("0.25", (1, 1)): 0.06949785374335979367879,
    ("0.25", (1, -1)): -0.04232180278898776665826,
    ("0.25", (2, 0)): -0.01980122462766083532264,
    ("0.25", (2, 1)): -0.01891303297308454199361,
    ("0.25", (2, -1)): -0.01193451367952572013956,
    ("0.25", (2, 2)): -0.008586322105355663735748,
    ("0.25", (2, -2)): -0.006311276787236239147996,
    ("0.5", (0, 0)): 1.164135151806152791558,
    ("0.5", (1, 0)): -0.09574371106684700674348,
    ("0.5", (1, 1)): 0.05821245950763205446571,
    ("0.5", (1, -1)): -0.08108283797561276957443,
    ("0.5", (2, 0)): -0.03126479118899755481485,
    ("0.5", (2, 1)): -0.03210429650529150769836,
    ("0.5", (2, -1)): -0.01603149168785701846983,
    ("0.5", (2, 2)): -0.01137293169939435785899,
    ("0.5", (2, -2)): -0.007331583273686707759295,
    ("0.75", (0, 0)): 2.032804212209162866952,
    ("0.75", (1, 0)): -0.3562818106582842708001,
    ("0.75", (1, 1)): 0.04282880304783849306842,
    ("0.75", (1, -1)): -0.09564623406780366530715,
    ("0.75", (2, 0)): -0.02909187027626938573801,
    ("0.75", (2, 1)): -0.03441109414006652317511,
    ("0.75", (2, -1)): -0.01227423953463328532447,
    ("0.75", (2, 2)): -0.008852992929429647578964,
    ("0.75", (2, -2)): -0.004820662939082908405473,
    ("0.9", (0, 0)): 2.994455775243924146515,
    ("0.9", (1, 0)): -0.6654330826053737528218,
    ("0.9", (1, 1)): 0.0240405666934798812509,
    ("0.9", (1, -1)): -0.06364352985100208984377,
    ("0.9", (2, 0)): -0.01615397398438849954808,
    ("0.9", (2, 1)): -0.0219665917027728447505,
    ("0.9", (2, -1)): -0.005936900492955943409483,
    ("0.9", (2, 2)): -0.004411060357027866349498,
    ("0.9", (2, -2)): -0.002120669245792467007532,
}

SQUARE_RHO = {
    ("0.25", (0.0, 0.0)): 11.90884927616788599696,
    ("0.25", (0.5, 0.0)): 12.88698613443938728178,
    ("0.25", (0.5, 0.5)): 13.7750130528299159121,
    ("0.25", (-0.7, 0.3)): 14.74306687024164385184,
    ("0.25", (0.9, 0.9)): 26.78096268793122243503,
    ("0.5", (0.0, 0.0)): 5.656854249492380195207,
    ("0.5", (0.5, 0.0)): 6.875836805308905588231,
    ("0.5", (0.5, 0.5)): 7.987606379886092572803,
    ("0.5", (-0.7, 0.3)): 9.560805390842065985539,
    ("0.5", (0.9, 0.9)): 34.91414022544358498939,
    ("0.75", (0.0, 0.0)): 3.591294810993170734222,
    ("0.75", (0.5, 0.0)): 5.089728592993466556751,
    ("0.75", (0.5, 0.5)): 6.4645116284080560455,
    ("0.75", (-0.7, 0.3)): 9.007033720521127021898,
    ("0.75", (0.9, 0.9)): 65.60244124320090349199,
}

C_DS = {
    (1, "0.001"): 0.0009988478746092334974029,
    (1, "0.01"): 0.009886815529389171451417,
    (1, "0.1"): 0.09031398287145561345241,
    (1, "0.25"): 0.19947114020071633897,
    (1, "0.5"): 0.3183098861837906715378,
    (1, "0.75"): 0.299206710301074508455,
    (1, "0.9"): 0.164904938818302724899,
    (1, "0.99"): 0.01963259668758178242104,
    (2, "0.001"): 0.0003183836987806608025484,
    (2, "0.01"): 0.003190485297312709996635,
    (2, "0.1"): 0.03255142202994105511494,
    (2, "0.25"): 0.08324198387542506548894,
    (2, "0.5"): 0.1591549430918953357689,
    (2, "0.75"): 0.1711671296905523429252,
    (2, "0.9"): 0.1008498598614890797193,
    (2, "0.99"): 0.01245013003777174899002,
}

DISK_SOLUTION = {
    "0.25": (0.8606822266341461164119, 2.163130368215311132785),
    "0.5": (0.6366197723675813430755, 1.333333333333333333333),
    "0.75": (0.4185669068638884201442, 0.7514095540796543218567),
    "0.9": (0.3104611913062603299321, 0.5133382093855172825566),
}
