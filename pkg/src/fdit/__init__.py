"""Force-direction informed trees: elliptical-KNN batch planning."""
