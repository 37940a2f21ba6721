"""Demo: first two bands of a dilute bubble crystal along the corner path.

A unit square lattice of soft circular inclusions (radius 0.05, density and
compressibility contrast 5000 against the surrounding fluid) is swept along
the closed Bloch path (0,0) -> (pi,0) -> (pi,pi) -> (0,0).  The first band
is flat and subwavelength -- it peaks at the corner (pi,pi) far below the
free-fluid dispersion -- and a wide gap separates it from the second band.

Run:
  python3 demos/band_diagram.py       # text table, about half a minute
"""

from bubblebands.bands import band_structure
from bubblebands.multipole import DiskCrystal, MaterialParams


def main():
    material = MaterialParams(rho=5000.0, kappa=5000.0, rho_b=1.0, kappa_b=1.0)
    crystal = DiskCrystal(radius=0.05)
    structure = band_structure(
        material, crystal, 3, resolution=6, band_count=2, omega_max=5.0
    )

    print("   s    alpha_x  alpha_y     band 1     band 2")
    for point in structure.points:
        ax, ay = point.alpha
        w1, w2 = point.omegas
        print(f"{point.s:6.3f}  {ax:7.3f}  {ay:7.3f}  {w1:9.6f}  {w2:9.6f}")

    lo, hi = structure.gap
    ax, ay = structure.argmax_alpha
    print(f"\nband-1 peak omega* = {structure.omega_star:.6f} "
          f"at alpha = ({ax:.3f}, {ay:.3f})")
    print(f"subwavelength gap  = ({lo:.6f}, {hi:.6f})")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    s = [point.s for point in structure.points]
    for band in range(2):
        plt.plot(s, [point.omegas[band] for point in structure.points],
                 "o-", markersize=3)
    plt.axhspan(lo, hi, color="0.92")
    plt.xticks([0.0, 1 / 3, 2 / 3, 1.0],
               ["(0,0)", "(pi,0)", "(pi,pi)", "(0,0)"])
    plt.xlabel("position along the corner path")
    plt.ylabel("frequency")
    plt.title("dilute bubble crystal: first two bands and the gap")
    plt.savefig("band_diagram.png", dpi=150)
    print("wrote band_diagram.png")


if __name__ == "__main__":
    main()
