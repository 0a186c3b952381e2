namespace ppflow {}
