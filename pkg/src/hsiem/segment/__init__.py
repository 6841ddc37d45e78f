# HSIEM Segment Forms Package
