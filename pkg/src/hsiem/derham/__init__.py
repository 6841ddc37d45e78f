# HSIEM De Rham Complex Package
