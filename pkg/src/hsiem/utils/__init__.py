# HSIEM Utilities Package
