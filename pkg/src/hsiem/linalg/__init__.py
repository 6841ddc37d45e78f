# HSIEM Linear Algebra Package
